//! The lifted decision vector, feasible box, and augmented Lagrangian.
//!
//! The decision vector stacks `xi = (x, t, g, h, z, lam_t, lam_g, lam_h,
//! lam_z)`: voltage coordinates `x = [Re V; Im V]` over the working buses,
//! per-bus active/reactive injection variables `t, g`, squared voltage
//! magnitudes `h`, squared apparent power `z` per generator, and one
//! multiplier block per constraint family. With `N` regular buses and `N_G`
//! generators the folded layout has dimension `8N + 2N_G`; the embedded
//! layout adds the two frozen slack coordinates.
//!
//! The augmented Lagrangian couples the generator cost to four constraint
//! families, each contributing `-lam·r + (mu/2)·r^2` for its residual `r`:
//!
//! - `r_t[i] = P_i(x) - t_i` and `r_g[i] = Q_i(x) - g_i` (injection match),
//! - `r_h[i] = |V_i|^2 - h_i` (magnitude match),
//! - `r_z[i] = (t_i + Pl_i)^2 + (g_i + Ql_i)^2 - z_i` (apparent power).
//!
//! Every evaluation here is a pure function of `(xi, instance)` and safe for
//! concurrent use. The single source of truth for derivatives is
//! [`restriction_poly`], which expands the Lagrangian exactly along one
//! coordinate; gradients and curvatures are read off its coefficients.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::network::{ConstantMatrices, NetworkModel};
use crate::Result;

// ---------------------------------------------------------------------------
// Layout
// ---------------------------------------------------------------------------

/// Identifies one coordinate of the lifted vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coord {
    /// Voltage coordinate `j in 0..2*n_x` (`j < n_x`: real part of bus `j`).
    X(usize),
    /// Active injection variable of regular bus `i`.
    T(usize),
    /// Reactive injection variable of regular bus `i`.
    G(usize),
    /// Squared voltage magnitude of regular bus `i`.
    H(usize),
    /// Squared apparent power of generator ordinal `k`.
    Z(usize),
    LamT(usize),
    LamG(usize),
    LamH(usize),
    LamZ(usize),
}

/// Deterministic bijection between coordinate roles and flat indices, in the
/// order `(x, t, g, h, z, lam_t, lam_g, lam_h, lam_z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateLayout {
    n_x: usize,
    n: usize,
    n_g: usize,
}

impl StateLayout {
    /// Layout with the voltage block over exactly the `n` regular buses;
    /// total dimension `8n + 2n_g`.
    pub fn new(n: usize, n_g: usize) -> Self {
        assert!(n >= 1 && n_g <= n);
        StateLayout { n_x: n, n, n_g }
    }

    /// Layout with the slack appended to the voltage block (two extra
    /// coordinates, frozen by the solver).
    pub fn embedded(n: usize, n_g: usize) -> Self {
        assert!(n >= 1 && n_g <= n);
        StateLayout { n_x: n + 1, n, n_g }
    }

    /// Layout matching a set of constant matrices (slack mode included).
    pub fn for_matrices(m: &ConstantMatrices, n_g: usize) -> Self {
        assert!(n_g <= m.n());
        StateLayout {
            n_x: m.n_x(),
            n: m.n(),
            n_g,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_g(&self) -> usize {
        self.n_g
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    /// Total dimension `2 n_x + 6 n + 2 n_g`.
    pub fn dim(&self) -> usize {
        2 * self.n_x + 6 * self.n + 2 * self.n_g
    }

    pub fn x(&self, j: usize) -> usize {
        debug_assert!(j < 2 * self.n_x);
        j
    }

    pub fn t(&self, i: usize) -> usize {
        debug_assert!(i < self.n);
        2 * self.n_x + i
    }

    pub fn g(&self, i: usize) -> usize {
        2 * self.n_x + self.n + i
    }

    pub fn h(&self, i: usize) -> usize {
        2 * self.n_x + 2 * self.n + i
    }

    pub fn z(&self, k: usize) -> usize {
        debug_assert!(k < self.n_g);
        2 * self.n_x + 3 * self.n + k
    }

    pub fn lam_t(&self, i: usize) -> usize {
        2 * self.n_x + 3 * self.n + self.n_g + i
    }

    pub fn lam_g(&self, i: usize) -> usize {
        2 * self.n_x + 4 * self.n + self.n_g + i
    }

    pub fn lam_h(&self, i: usize) -> usize {
        2 * self.n_x + 5 * self.n + self.n_g + i
    }

    pub fn lam_z(&self, k: usize) -> usize {
        2 * self.n_x + 6 * self.n + self.n_g + k
    }

    pub fn pack(&self, c: Coord) -> usize {
        match c {
            Coord::X(j) => self.x(j),
            Coord::T(i) => self.t(i),
            Coord::G(i) => self.g(i),
            Coord::H(i) => self.h(i),
            Coord::Z(k) => self.z(k),
            Coord::LamT(i) => self.lam_t(i),
            Coord::LamG(i) => self.lam_g(i),
            Coord::LamH(i) => self.lam_h(i),
            Coord::LamZ(k) => self.lam_z(k),
        }
    }

    pub fn unpack(&self, flat: usize) -> Coord {
        assert!(flat < self.dim(), "index {flat} outside dim {}", self.dim());
        let mut r = flat;
        if r < 2 * self.n_x {
            return Coord::X(r);
        }
        r -= 2 * self.n_x;
        if r < self.n {
            return Coord::T(r);
        }
        r -= self.n;
        if r < self.n {
            return Coord::G(r);
        }
        r -= self.n;
        if r < self.n {
            return Coord::H(r);
        }
        r -= self.n;
        if r < self.n_g {
            return Coord::Z(r);
        }
        r -= self.n_g;
        if r < self.n {
            return Coord::LamT(r);
        }
        r -= self.n;
        if r < self.n {
            return Coord::LamG(r);
        }
        r -= self.n;
        if r < self.n {
            return Coord::LamH(r);
        }
        r -= self.n;
        Coord::LamZ(r)
    }

    /// Bus index of voltage coordinate `j`.
    pub fn bus_of_x(&self, j: usize) -> usize {
        if j < self.n_x {
            j
        } else {
            j - self.n_x
        }
    }
}

/// The lifted decision vector together with its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedState {
    layout: StateLayout,
    values: Vec<f64>,
}

impl LiftedState {
    pub fn zeros(layout: StateLayout) -> Self {
        LiftedState {
            layout,
            values: vec![0.0; layout.dim()],
        }
    }

    pub fn from_values(layout: StateLayout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.dim() {
            return Err(Error::Dimension {
                context: "lifted state".into(),
                expected: layout.dim(),
                got: values.len(),
            });
        }
        Ok(LiftedState { layout, values })
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn x(&self) -> &[f64] {
        &self.values[..2 * self.layout.n_x]
    }

    pub fn get(&self, c: Coord) -> f64 {
        self.values[self.layout.pack(c)]
    }

    pub fn set(&mut self, c: Coord, v: f64) {
        let idx = self.layout.pack(c);
        self.values[idx] = v;
    }
}

// ---------------------------------------------------------------------------
// Problem instance and feasible box
// ---------------------------------------------------------------------------

/// A network plus one time step's loads and available generation.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub model: Arc<NetworkModel>,
    pub matrices: Arc<ConstantMatrices>,
    /// Active load per regular bus, pu.
    pub pl: Vec<f64>,
    /// Reactive load per regular bus, pu.
    pub ql: Vec<f64>,
    /// Available active generation per generator ordinal, pu.
    pub p_av: Vec<f64>,
    /// Effective time of the data sample, seconds.
    pub timestamp: f64,
}

impl ProblemInstance {
    /// Instance carrying the case file's static loads and availability caps.
    pub fn from_static(model: Arc<NetworkModel>, matrices: Arc<ConstantMatrices>) -> Self {
        let pl = model.buses.iter().map(|b| b.pl).collect();
        let ql = model.buses.iter().map(|b| b.ql).collect();
        let p_av = model.generators.iter().map(|g| g.p_av_max).collect();
        ProblemInstance {
            model,
            matrices,
            pl,
            ql,
            p_av,
            timestamp: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.model.n();
        for (name, v, want) in [
            ("pl", &self.pl, n),
            ("ql", &self.ql, n),
            ("p_av", &self.p_av, self.model.n_gens()),
        ] {
            if v.len() != want {
                return Err(Error::Dimension {
                    context: format!("instance {name}"),
                    expected: want,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("instance {name}"),
                });
            }
        }
        if self.p_av.iter().any(|&x| x < 0.0) {
            return Err(Error::Domain("negative generation availability".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> StateLayout {
        StateLayout {
            n_x: self.matrices.n_x(),
            n: self.model.n(),
            n_g: self.model.n_gens(),
        }
    }

    /// Builds the feasible box for this instance's loads and availability.
    pub fn box_set(&self) -> BoxSet {
        let layout = self.layout();
        let mut lo = vec![f64::NEG_INFINITY; layout.dim()];
        let mut hi = vec![f64::INFINITY; layout.dim()];

        if let Some((re_idx, im_idx)) = self.matrices.frozen_x() {
            let v0 = self.matrices.slack_voltage();
            lo[layout.x(re_idx)] = v0.re;
            hi[layout.x(re_idx)] = v0.re;
            lo[layout.x(im_idx)] = v0.im;
            hi[layout.x(im_idx)] = v0.im;
        }

        for i in 0..layout.n {
            let idx = layout.t(i);
            match self.model.gen_at(i) {
                Some(k) => {
                    let gen = &self.model.generators[k];
                    lo[idx] = -self.pl[i];
                    hi[idx] = self.p_av[k].min(gen.s_rating) - self.pl[i];
                }
                None => {
                    lo[idx] = -self.pl[i];
                    hi[idx] = -self.pl[i];
                }
            }
            let idx = layout.g(i);
            if !self.model.is_generator(i) {
                lo[idx] = -self.ql[i];
                hi[idx] = -self.ql[i];
            }
            let bus = &self.model.buses[i];
            if bus.regulated {
                let idx = layout.h(i);
                lo[idx] = bus.vmin * bus.vmin;
                hi[idx] = bus.vmax * bus.vmax;
            }
        }
        for (k, gen) in self.model.generators.iter().enumerate() {
            hi[layout.z(k)] = gen.s_rating * gen.s_rating;
        }
        BoxSet { layout, lo, hi }
    }
}

/// Per-coordinate interval bounds; equality pins are degenerate intervals.
/// Voltage and multiplier coordinates are unbounded (except frozen slack).
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    layout: StateLayout,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxSet {
    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn interval(&self, flat: usize) -> (f64, f64) {
        (self.lo[flat], self.hi[flat])
    }

    pub fn clamp(&self, flat: usize, v: f64) -> f64 {
        v.max(self.lo[flat]).min(self.hi[flat])
    }

    /// Coordinate-wise Euclidean projection onto the box.
    pub fn project(&self, state: &mut LiftedState) {
        assert_eq!(state.layout(), self.layout);
        for (j, v) in state.values.iter_mut().enumerate() {
            *v = v.max(self.lo[j]).min(self.hi[j]);
        }
    }

    pub fn contains(&self, state: &LiftedState, tol: f64) -> bool {
        state
            .values
            .iter()
            .enumerate()
            .all(|(j, &v)| v >= self.lo[j] - tol && v <= self.hi[j] + tol)
    }
}

// ---------------------------------------------------------------------------
// Lagrangian evaluation
// ---------------------------------------------------------------------------

struct BusTerms {
    tau: f64,
    taubar: f64,
    msq: f64,
}

fn bus_terms(inst: &ProblemInstance, x: &[f64], i: usize) -> BusTerms {
    BusTerms {
        tau: inst.matrices.active_injection(i, x),
        taubar: inst.matrices.reactive_injection(i, x),
        msq: inst.matrices.magnitude_sq(i, x),
    }
}

fn apparent_sq(inst: &ProblemInstance, state: &LiftedState, i: usize) -> f64 {
    let layout = state.layout();
    let tp = state.as_slice()[layout.t(i)] + inst.pl[i];
    let gq = state.as_slice()[layout.g(i)] + inst.ql[i];
    tp * tp + gq * gq
}

/// Raw augmented Lagrangian value; may be non-finite on overflow.
pub fn lagrangian_value(state: &LiftedState, mu: f64, inst: &ProblemInstance) -> f64 {
    debug_assert!(mu >= 0.0);
    let layout = state.layout();
    let v = state.as_slice();
    let x = state.x();
    let mut total = 0.0;

    for i in 0..layout.n {
        let bt = bus_terms(inst, x, i);
        let r_t = bt.tau - v[layout.t(i)];
        let r_g = bt.taubar - v[layout.g(i)];
        let r_h = bt.msq - v[layout.h(i)];
        total += -v[layout.lam_t(i)] * r_t + 0.5 * mu * r_t * r_t;
        total += -v[layout.lam_g(i)] * r_g + 0.5 * mu * r_g * r_g;
        total += -v[layout.lam_h(i)] * r_h + 0.5 * mu * r_h * r_h;
        if let Some(k) = inst.model.gen_at(i) {
            let gen = &inst.model.generators[k];
            let p = inst.pl[i] + bt.tau;
            let q = inst.ql[i] + bt.taubar;
            total += gen.c * p * p + gen.d * q * q;
            let u_z = apparent_sq(inst, state, i) - v[layout.z(k)];
            total += -v[layout.lam_z(k)] * u_z + 0.5 * mu * u_z * u_z;
        }
    }
    total
}

/// Augmented Lagrangian value; a non-finite result is reported as an error
/// rather than silently propagated.
pub fn eval_lagrangian(state: &LiftedState, mu: f64, inst: &ProblemInstance) -> Result<f64> {
    let v = lagrangian_value(state, mu, inst);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            context: "augmented Lagrangian".into(),
        })
    }
}

/// Degree-4 polynomial in the step `alpha` along one coordinate, with
/// `poly(alpha) = L(xi + alpha e_idx) - L(xi)` exactly. Coefficient `c[0]`
/// is always zero; gradient and curvature are `c[1]` and `2 c[2]`.
pub fn restriction_poly(
    state: &LiftedState,
    mu: f64,
    inst: &ProblemInstance,
    flat: usize,
) -> [f64; 5] {
    let layout = state.layout();
    let v = state.as_slice();
    let x = state.x();
    let mut c = [0.0; 5];

    // Adds w*(value + b*alpha + a*alpha^2)^2 minus its alpha=0 part.
    let acc_sq = |c: &mut [f64; 5], w: f64, value: f64, b: f64, a: f64| {
        c[1] += 2.0 * w * value * b;
        c[2] += w * (b * b + 2.0 * value * a);
        c[3] += 2.0 * w * a * b;
        c[4] += w * a * a;
    };
    // Adds coef*(value + b*alpha + a*alpha^2) minus its alpha=0 part.
    let acc_lin = |c: &mut [f64; 5], coef: f64, b: f64, a: f64| {
        c[1] += coef * b;
        c[2] += coef * a;
    };

    match layout.unpack(flat) {
        Coord::X(j) => {
            let b = layout.bus_of_x(j);
            for &i in inst.matrices.coupled(b) {
                let bt = bus_terms(inst, x, i);
                let by = 2.0 * inst.matrices.y(i).row_dot(j, x) + inst.matrices.omega_coeff(i, j);
                let ay = inst.matrices.y(i).diag(j);
                let bb =
                    2.0 * inst.matrices.ybar(i).row_dot(j, x) + inst.matrices.omega_bar_coeff(i, j);
                let ab = inst.matrices.ybar(i).diag(j);

                let r_t = bt.tau - v[layout.t(i)];
                acc_lin(&mut c, -v[layout.lam_t(i)], by, ay);
                acc_sq(&mut c, 0.5 * mu, r_t, by, ay);

                let r_g = bt.taubar - v[layout.g(i)];
                acc_lin(&mut c, -v[layout.lam_g(i)], bb, ab);
                acc_sq(&mut c, 0.5 * mu, r_g, bb, ab);

                if let Some(k) = inst.model.gen_at(i) {
                    let gen = &inst.model.generators[k];
                    acc_sq(&mut c, gen.c, inst.pl[i] + bt.tau, by, ay);
                    acc_sq(&mut c, gen.d, inst.ql[i] + bt.taubar, bb, ab);
                }
            }
            if b < layout.n {
                // Magnitude form of the coordinate's own bus.
                let bm = 2.0 * x[j];
                let msq = inst.matrices.magnitude_sq(b, x);
                let r_h = msq - v[layout.h(b)];
                acc_lin(&mut c, -v[layout.lam_h(b)], bm, 1.0);
                acc_sq(&mut c, 0.5 * mu, r_h, bm, 1.0);
            }
        }
        Coord::T(i) => {
            let bt = bus_terms(inst, x, i);
            let r_t = bt.tau - v[layout.t(i)];
            acc_lin(&mut c, -v[layout.lam_t(i)], -1.0, 0.0);
            acc_sq(&mut c, 0.5 * mu, r_t, -1.0, 0.0);
            if let Some(k) = inst.model.gen_at(i) {
                let u_z = apparent_sq(inst, state, i) - v[layout.z(k)];
                let bu = 2.0 * (v[layout.t(i)] + inst.pl[i]);
                acc_lin(&mut c, -v[layout.lam_z(k)], bu, 1.0);
                acc_sq(&mut c, 0.5 * mu, u_z, bu, 1.0);
            }
        }
        Coord::G(i) => {
            let bt = bus_terms(inst, x, i);
            let r_g = bt.taubar - v[layout.g(i)];
            acc_lin(&mut c, -v[layout.lam_g(i)], -1.0, 0.0);
            acc_sq(&mut c, 0.5 * mu, r_g, -1.0, 0.0);
            if let Some(k) = inst.model.gen_at(i) {
                let u_z = apparent_sq(inst, state, i) - v[layout.z(k)];
                let bu = 2.0 * (v[layout.g(i)] + inst.ql[i]);
                acc_lin(&mut c, -v[layout.lam_z(k)], bu, 1.0);
                acc_sq(&mut c, 0.5 * mu, u_z, bu, 1.0);
            }
        }
        Coord::H(i) => {
            let bt = bus_terms(inst, x, i);
            let r_h = bt.msq - v[layout.h(i)];
            acc_lin(&mut c, -v[layout.lam_h(i)], -1.0, 0.0);
            acc_sq(&mut c, 0.5 * mu, r_h, -1.0, 0.0);
        }
        Coord::Z(k) => {
            let i = inst.model.generators[k].bus;
            let u_z = apparent_sq(inst, state, i) - v[layout.z(k)];
            acc_lin(&mut c, -v[layout.lam_z(k)], -1.0, 0.0);
            acc_sq(&mut c, 0.5 * mu, u_z, -1.0, 0.0);
        }
        Coord::LamT(i) => {
            let bt = bus_terms(inst, x, i);
            c[1] = -(bt.tau - v[layout.t(i)]);
        }
        Coord::LamG(i) => {
            let bt = bus_terms(inst, x, i);
            c[1] = -(bt.taubar - v[layout.g(i)]);
        }
        Coord::LamH(i) => {
            let bt = bus_terms(inst, x, i);
            c[1] = -(bt.msq - v[layout.h(i)]);
        }
        Coord::LamZ(k) => {
            let i = inst.model.generators[k].bus;
            c[1] = -(apparent_sq(inst, state, i) - v[layout.z(k)]);
        }
    }
    c
}

/// Exact partial derivative of the Lagrangian along one coordinate. For
/// multiplier coordinates this is minus the corresponding residual.
pub fn coord_gradient(state: &LiftedState, mu: f64, inst: &ProblemInstance, flat: usize) -> f64 {
    restriction_poly(state, mu, inst, flat)[1]
}

/// Exact second partial derivative along one coordinate; zero for
/// multiplier coordinates.
pub fn coord_curvature(state: &LiftedState, mu: f64, inst: &ProblemInstance, flat: usize) -> f64 {
    2.0 * restriction_poly(state, mu, inst, flat)[2]
}

// ---------------------------------------------------------------------------
// Residuals and metrics
// ---------------------------------------------------------------------------

/// Constraint residual vectors at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub r_t: Vec<f64>,
    pub r_g: Vec<f64>,
    pub r_h: Vec<f64>,
    pub r_z: Vec<f64>,
}

impl Residuals {
    pub fn max_abs(&self) -> f64 {
        self.r_t
            .iter()
            .chain(&self.r_g)
            .chain(&self.r_h)
            .chain(&self.r_z)
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

pub fn residuals(state: &LiftedState, inst: &ProblemInstance) -> Residuals {
    let layout = state.layout();
    let v = state.as_slice();
    let x = state.x();
    let mut r = Residuals {
        r_t: Vec::with_capacity(layout.n),
        r_g: Vec::with_capacity(layout.n),
        r_h: Vec::with_capacity(layout.n),
        r_z: Vec::with_capacity(layout.n_g),
    };
    for i in 0..layout.n {
        let bt = bus_terms(inst, x, i);
        r.r_t.push(bt.tau - v[layout.t(i)]);
        r.r_g.push(bt.taubar - v[layout.g(i)]);
        r.r_h.push(bt.msq - v[layout.h(i)]);
    }
    for (k, gen) in inst.model.generators.iter().enumerate() {
        r.r_z.push(apparent_sq(inst, state, gen.bus) - v[layout.z(k)]);
    }
    r
}

/// Cost, infeasibility measures, and per-bus voltage magnitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Generation cost `sum c_i P_i^2 + d_i Q_i^2`.
    pub cost: f64,
    /// Full infeasibility `T`: sum of squared constraint residuals.
    pub t: f64,
    /// Lower bound `T'`: drops the non-generator injection residual terms.
    pub t_prime: f64,
    /// `|V_i|` per regular bus.
    pub v_mag: Vec<f64>,
}

pub fn eval_metrics(state: &LiftedState, inst: &ProblemInstance) -> Metrics {
    let layout = state.layout();
    let x = state.x();
    let r = residuals(state, inst);
    let mut cost = 0.0;
    for (_, gen) in inst.model.generators.iter().enumerate() {
        let i = gen.bus;
        let bt = bus_terms(inst, x, i);
        let p = inst.pl[i] + bt.tau;
        let q = inst.ql[i] + bt.taubar;
        cost += gen.c * p * p + gen.d * q * q;
    }
    let mut t = 0.0;
    let mut non_gen = 0.0;
    for i in 0..layout.n {
        t += r.r_t[i] * r.r_t[i] + r.r_g[i] * r.r_g[i] + r.r_h[i] * r.r_h[i];
        if !inst.model.is_generator(i) {
            non_gen += r.r_t[i] * r.r_t[i] + r.r_g[i] * r.r_g[i];
        }
    }
    for rz in &r.r_z {
        t += rz * rz;
    }
    let v_mag = (0..layout.n)
        .map(|i| inst.matrices.magnitude_sq(i, x).max(0.0).sqrt())
        .collect();
    Metrics {
        cost,
        t,
        t_prime: t - non_gen,
        v_mag,
    }
}

// ---------------------------------------------------------------------------
// Initial state
// ---------------------------------------------------------------------------

/// Flat start: every working bus at the slack voltage, auxiliary variables
/// set residual-free from that voltage, multipliers zero, then projected
/// onto the instance's box.
pub fn initial_state(inst: &ProblemInstance) -> LiftedState {
    let layout = inst.layout();
    let mut state = LiftedState::zeros(layout);
    let v0 = inst.matrices.slack_voltage();
    for b in 0..layout.n_x {
        state.values[b] = v0.re;
        state.values[layout.n_x + b] = v0.im;
    }
    let x: Vec<f64> = state.x().to_vec();
    for i in 0..layout.n {
        let bt = bus_terms(inst, &x, i);
        state.values[layout.t(i)] = bt.tau;
        state.values[layout.g(i)] = bt.taubar;
        state.values[layout.h(i)] = bt.msq;
    }
    for (k, gen) in inst.model.generators.iter().enumerate() {
        state.values[layout.z(k)] = apparent_sq(inst, &state, gen.bus);
    }
    inst.box_set().project(&mut state);
    state
}
