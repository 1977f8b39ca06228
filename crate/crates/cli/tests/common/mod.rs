// Each test binary compiles this module separately and uses a different
// subset of it.
#![allow(dead_code)]

//! Shared oracle machinery for the acceptance suite: an independent complex
//! power-flow Newton solve, a grid-and-zoom cost oracle for the two-bus case,
//! KKT multiplier reconstruction, and a feeder-style large case builder.
//!
//! Everything here recomputes physics from raw case data (its own admittance
//! assembly, complex arithmetic injections) so it stays independent of the
//! solver's sparse quadratic-form path.

use std::path::PathBuf;
use std::sync::Arc;

use opftrack_core::lifted::{coord_gradient, LiftedState, ProblemInstance};
use opftrack_core::network::{
    BusSpec, CaseFile, ConstantMatrices, GeneratorSpec, LineSpec, NetworkModel, SlackMode,
    SlackSpec,
};

pub use num_complex::Complex64;

pub fn case_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../cases")
        .join(name)
}

pub fn bin_path() -> &'static str {
    env!("CARGO_BIN_EXE_opftrack")
}

// ---------------------------------------------------------------------------
// Independent power-flow oracle
// ---------------------------------------------------------------------------

/// Dense pi-model admittance straight from the line list, slack last.
pub fn dense_admittance(model: &NetworkModel) -> Vec<Vec<Complex64>> {
    let dim = model.n() + 1;
    let zero = Complex64::new(0.0, 0.0);
    let mut y = vec![vec![zero; dim]; dim];
    for l in &model.lines {
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(l.r, l.x);
        let sh = Complex64::new(0.0, l.b_shunt / 2.0);
        y[l.from][l.from] += ys + sh;
        y[l.to][l.to] += ys + sh;
        y[l.from][l.to] -= ys;
        y[l.to][l.from] -= ys;
    }
    y
}

/// Complex injections `S_i = V_i conj(sum_m y_im V_m)` for regular buses.
pub fn injections(y: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
    (0..v.len())
        .map(|i| {
            let mut cur = Complex64::new(0.0, 0.0);
            for (m, ym) in y[i].iter().enumerate() {
                cur += ym * v[m];
            }
            v[i] * cur.conj()
        })
        .collect()
}

/// Newton solve of the bus-1 balance on the two-bus network: with `V2` held
/// fixed, find `V1` such that the injection at bus 1 equals minus its load.
/// Numerical Jacobian; `None` when Newton fails to converge.
pub fn solve_v1(
    y: &[Vec<Complex64>],
    model: &NetworkModel,
    pl: &[f64],
    ql: &[f64],
    v2: Complex64,
    start: Complex64,
) -> Option<Complex64> {
    let v0 = model.slack.voltage();
    let target = Complex64::new(-pl[0], -ql[0]);
    let mut v1 = start;
    for _ in 0..80 {
        let f = |v1x: Complex64| {
            let v = vec![v1x, v2, v0];
            injections(y, &v)[0] - target
        };
        let r = f(v1);
        if r.norm() < 1e-13 {
            return Some(v1);
        }
        let h = 1e-7;
        let dre = (f(v1 + Complex64::new(h, 0.0)) - r) / h;
        let dim = (f(v1 + Complex64::new(0.0, h)) - r) / h;
        let (a, b, c, d) = (dre.re, dim.re, dre.im, dim.im);
        let det = a * d - b * c;
        if det.abs() < 1e-14 {
            return None;
        }
        v1 -= Complex64::new((r.re * d - b * r.im) / det, (a * r.im - r.re * c) / det);
        if !(v1.re.is_finite() && v1.im.is_finite()) {
            return None;
        }
    }
    None
}

/// A feasible two-bus operating point found by the oracle.
#[derive(Debug, Clone, Copy)]
pub struct OraclePoint {
    pub cost: f64,
    pub v1: Complex64,
    pub v2: Complex64,
    pub p2: f64,
    pub q2: f64,
}

fn check_point(
    y: &[Vec<Complex64>],
    model: &NetworkModel,
    pl: &[f64],
    ql: &[f64],
    p_av: f64,
    v2: Complex64,
    warm: Complex64,
) -> Option<OraclePoint> {
    let v1 = solve_v1(y, model, pl, ql, v2, warm)?;
    let v0 = model.slack.voltage();
    let s = injections(y, &[v1, v2, v0]);
    let gen = &model.generators[0];
    let p2 = s[1].re + pl[1];
    let q2 = s[1].im + ql[1];
    let tol = 1e-9;
    for (vv, bus) in [(v1, &model.buses[0]), (v2, &model.buses[1])] {
        if bus.regulated && (vv.norm() < bus.vmin - tol || vv.norm() > bus.vmax + tol) {
            return None;
        }
    }
    if p2 < -tol || p2 > p_av.min(gen.s_rating) + tol {
        return None;
    }
    if p2 * p2 + q2 * q2 > gen.s_rating * gen.s_rating + tol {
        return None;
    }
    Some(OraclePoint {
        cost: gen.c * p2 * p2 + gen.d * q2 * q2,
        v1,
        v2,
        p2,
        q2,
    })
}

/// Brute-force minimum generation cost over feasible two-bus states:
/// scans the generator-bus voltage over magnitude and angle, solving the
/// load-bus power flow at every grid point, then zooms around the incumbent.
pub fn two_bus_cost_oracle(
    model: &NetworkModel,
    pl: &[f64],
    ql: &[f64],
    p_av: f64,
    levels: usize,
) -> Option<OraclePoint> {
    assert_eq!(model.n(), 2, "oracle is specific to the two-bus layout");
    let y = dense_admittance(model);
    let bus2 = &model.buses[1];
    let mut mag_range = (bus2.vmin - 0.01, bus2.vmax + 0.01);
    let mut ang_range = (-0.6f64, 0.3f64);
    let mut warm = model.slack.voltage();
    let mut best: Option<OraclePoint> = None;
    for _ in 0..levels {
        let steps = 32;
        let mut level_best: Option<OraclePoint> = None;
        for im in 0..=steps {
            let mag = mag_range.0 + (mag_range.1 - mag_range.0) * im as f64 / steps as f64;
            for ia in 0..=steps {
                let ang = ang_range.0 + (ang_range.1 - ang_range.0) * ia as f64 / steps as f64;
                let v2 = Complex64::from_polar(mag, ang);
                if let Some(p) = check_point(&y, model, pl, ql, p_av, v2, warm) {
                    warm = p.v1;
                    if level_best.as_ref().map_or(true, |b| p.cost < b.cost) {
                        level_best = Some(p);
                    }
                }
            }
        }
        let lb = level_best?;
        let dm = (mag_range.1 - mag_range.0) / steps as f64;
        let da = (ang_range.1 - ang_range.0) / steps as f64;
        mag_range = (lb.v2.norm() - 2.0 * dm, lb.v2.norm() + 2.0 * dm);
        ang_range = (lb.v2.arg() - 2.0 * da, lb.v2.arg() + 2.0 * da);
        warm = lb.v1;
        best = Some(lb);
    }
    best
}

// ---------------------------------------------------------------------------
// Lifted-state construction from oracle points
// ---------------------------------------------------------------------------

/// Residual-free lifted state for given regular-bus voltages; multipliers
/// zero. Works in both slack modes.
pub fn feasible_state(inst: &ProblemInstance, voltages: &[Complex64]) -> LiftedState {
    let layout = inst.layout();
    let mut s = LiftedState::zeros(layout);
    let n_x = layout.n_x();
    for (b, v) in voltages.iter().enumerate() {
        s.as_mut_slice()[b] = v.re;
        s.as_mut_slice()[n_x + b] = v.im;
    }
    if let Some((re_idx, im_idx)) = inst.matrices.frozen_x() {
        let v0 = inst.matrices.slack_voltage();
        s.as_mut_slice()[re_idx] = v0.re;
        s.as_mut_slice()[im_idx] = v0.im;
    }
    let x: Vec<f64> = s.x().to_vec();
    for i in 0..layout.n() {
        s.as_mut_slice()[layout.t(i)] = inst.matrices.active_injection(i, &x);
        s.as_mut_slice()[layout.g(i)] = inst.matrices.reactive_injection(i, &x);
        s.as_mut_slice()[layout.h(i)] = inst.matrices.magnitude_sq(i, &x);
    }
    for (k, gen) in inst.model.generators.iter().enumerate() {
        let tp = s.as_slice()[layout.t(gen.bus)] + inst.pl[gen.bus];
        let gq = s.as_slice()[layout.g(gen.bus)] + inst.ql[gen.bus];
        s.as_mut_slice()[layout.z(k)] = tp * tp + gq * gq;
    }
    s
}

/// Builds the lifted state at an oracle minimizer and solves the
/// x-stationarity system for the active multipliers by least squares: pin
/// multipliers of non-generator buses, bound multipliers of active magnitude,
/// injection, and apparent-power constraints. Returns the state with
/// multipliers installed and the residual norm of the stationarity system.
pub fn kkt_state(inst: &ProblemInstance, point: &OraclePoint, mu: f64) -> (LiftedState, f64) {
    let layout = inst.layout();
    let mut state = feasible_state(inst, &[point.v1, point.v2]);
    let box_set = inst.box_set();
    box_set.project(&mut state);

    let atol = 1e-6;
    let mut unknowns: Vec<usize> = Vec::new();
    for i in 0..layout.n() {
        if !inst.model.is_generator(i) {
            unknowns.push(layout.lam_t(i));
            unknowns.push(layout.lam_g(i));
        } else {
            let (lo, hi) = box_set.interval(layout.t(i));
            let t = state.as_slice()[layout.t(i)];
            if (t - lo).abs() < atol || (t - hi).abs() < atol {
                unknowns.push(layout.lam_t(i));
            }
        }
        let (lo, hi) = box_set.interval(layout.h(i));
        let h = state.as_slice()[layout.h(i)];
        if lo.is_finite() && ((h - lo).abs() < atol || (h - hi).abs() < atol) {
            unknowns.push(layout.lam_h(i));
        }
    }
    for (k, gen) in inst.model.generators.iter().enumerate() {
        let z = state.as_slice()[layout.z(k)];
        if (z - gen.s_rating * gen.s_rating).abs() < atol {
            unknowns.push(layout.lam_z(k));
        }
    }

    // Free voltage coordinates = equations of the stationarity system.
    let frozen = inst.matrices.frozen_x();
    let eq_coords: Vec<usize> = (0..2 * layout.n_x())
        .filter(|&j| match frozen {
            Some((re, im)) => j != re && j != im,
            None => true,
        })
        .collect();

    // The x-gradient is affine in the multipliers; probe the linear map.
    let grad_at = |s: &LiftedState| -> Vec<f64> {
        eq_coords
            .iter()
            .map(|&j| coord_gradient(s, mu, inst, j))
            .collect()
    };
    let g0 = grad_at(&state);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(unknowns.len());
    for &u in &unknowns {
        let mut probe = state.clone();
        probe.as_mut_slice()[u] = 1.0;
        let gu = grad_at(&probe);
        cols.push(gu.iter().zip(&g0).map(|(a, b)| a - b).collect());
    }

    // Least squares via normal equations (tiny system).
    let m = unknowns.len();
    let mut ata = vec![vec![0.0f64; m]; m];
    let mut atb = vec![0.0f64; m];
    for r in 0..m {
        for c in 0..m {
            ata[r][c] = cols[r].iter().zip(&cols[c]).map(|(a, b)| a * b).sum();
        }
        atb[r] = cols[r].iter().zip(&g0).map(|(a, b)| -a * b).sum();
    }
    let lam = gauss_solve(&mut ata, &mut atb);

    for (u, l) in unknowns.iter().zip(&lam) {
        state.as_mut_slice()[*u] = *l;
    }
    let resid: f64 = grad_at(&state).iter().map(|g| g * g).sum::<f64>().sqrt();
    (state, resid)
}

fn gauss_solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| a[r1][col].abs().partial_cmp(&a[r2][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        assert!(p.abs() > 1e-12, "singular stationarity system");
        for r in 0..n {
            if r != col {
                let f = a[r][col] / p;
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    (0..n).map(|i| b[i] / a[i][i]).collect()
}

// ---------------------------------------------------------------------------
// Large feeder case
// ---------------------------------------------------------------------------

/// Radial system: `feeders` chains hanging off the slack bus, `n` buses
/// total, generators spread evenly. Deterministic.
pub fn feeder_case(
    n: usize,
    n_gens: usize,
    feeders: usize,
    vmin: f64,
    vmax: f64,
) -> NetworkModel {
    let buses = (1..=n as u32)
        .map(|id| BusSpec {
            id,
            vmin,
            vmax,
            regulated: true,
            pl: 0.01,
            ql: 0.003,
        })
        .collect();
    let mut lines = Vec::new();
    for head in 1..=feeders.min(n) as u32 {
        lines.push(LineSpec {
            from: 0,
            to: head,
            r: 0.15,
            x: 0.45,
            b_shunt: 0.0,
        });
    }
    for id in (feeders + 1)..=n {
        // Chain each bus onto the one `feeders` earlier: feeder f holds ids
        // f, f+feeders, f+2*feeders, ...
        lines.push(LineSpec {
            from: (id - feeders) as u32,
            to: id as u32,
            r: 0.25,
            x: 0.75,
            b_shunt: 0.0,
        });
    }
    let generators = (1..=n_gens)
        .map(|k| GeneratorSpec {
            bus: ((k * n) / n_gens) as u32,
            c: 1.0,
            d: 0.5,
            s_rating: 0.5,
            p_av_max: 0.3,
        })
        .collect();
    let case = CaseFile {
        base_mva: 100.0,
        slack: SlackSpec {
            rho0: 1.0,
            theta0: 0.0,
        },
        buses,
        lines,
        generators,
    };
    let model = NetworkModel::from_case(&case).unwrap();
    assert!(opftrack_core::network::validate_network(&model).is_empty());
    model
}

// ---------------------------------------------------------------------------
// Misc helpers
// ---------------------------------------------------------------------------

pub fn static_instance(model: Arc<NetworkModel>, mode: SlackMode) -> ProblemInstance {
    let matrices = Arc::new(ConstantMatrices::build(&model, mode).unwrap());
    ProblemInstance::from_static(model, matrices)
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

pub fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
