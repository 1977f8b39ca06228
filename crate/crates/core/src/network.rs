//! Power-network case files, admittance assembly, and per-bus constant
//! matrices.
//!
//! A case describes a slack bus (fixed voltage `rho0·e^{j·theta0}`), `N`
//! regular buses, pi-model lines, and a generator subset. All quantities are
//! per-unit. From the complex bus admittance matrix `y` we precompute, for
//! each regular bus `i`, three real symmetric `2n_x × 2n_x` matrices over the
//! stacked voltage vector `x = [Re V; Im V]`:
//!
//! - `M_i` selects the squared magnitude: `tr(M_i xx') = x_i^2 + x_{i+n_x}^2`;
//! - `Y_i` gives the active injection: `tr(Y_i xx') = P_i`;
//! - `Ybar_i` gives the reactive injection: `tr(Ybar_i xx') = Q_i`.
//!
//! Two slack treatments are supported. [`SlackMode::Embedded`] keeps the slack
//! voltage as two extra (frozen) coordinates of `x`, so the quadratic forms
//! alone produce the injections. [`SlackMode::Folded`] removes the slack
//! row/column and compensates with per-bus linear coefficient vectors
//! `omega_i`, `omegabar_i` (each has exactly two nonzeros, derived from the
//! slack line admittance and the fixed slack voltage).
//!
//! Everything in this module is immutable after construction and safe to share
//! across threads.

use std::collections::HashMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::sparse::{SparseComplex, SparseSym};
use crate::Result;

/// How the slack bus enters the quadratic forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlackMode {
    /// Slack voltage is appended to `x` as two frozen coordinates.
    Embedded,
    /// Slack row/column folded out; linear correction terms carry its effect.
    Folded,
}

impl Default for SlackMode {
    fn default() -> Self {
        SlackMode::Embedded
    }
}

impl std::fmt::Display for SlackMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SlackMode::Embedded => write!(f, "embedded"),
            SlackMode::Folded => write!(f, "folded"),
        }
    }
}

// ---------------------------------------------------------------------------
// Case file schema
// ---------------------------------------------------------------------------

/// On-disk case schema. External bus id 0 is reserved for the slack bus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseFile {
    #[serde(rename = "baseMVA")]
    pub base_mva: f64,
    pub slack: SlackSpec,
    pub buses: Vec<BusSpec>,
    pub lines: Vec<LineSpec>,
    pub generators: Vec<GeneratorSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlackSpec {
    pub rho0: f64,
    pub theta0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BusSpec {
    pub id: u32,
    pub vmin: f64,
    pub vmax: f64,
    pub regulated: bool,
    /// Static active load in pu; scenario columns override it.
    #[serde(default)]
    pub pl: f64,
    /// Static reactive load in pu.
    #[serde(default)]
    pub ql: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineSpec {
    pub from: u32,
    pub to: u32,
    pub r: f64,
    pub x: f64,
    #[serde(default)]
    pub b_shunt: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub bus: u32,
    pub c: f64,
    pub d: f64,
    pub s_rating: f64,
    pub p_av_max: f64,
}

// ---------------------------------------------------------------------------
// Validated model
// ---------------------------------------------------------------------------

/// Slack bus voltage specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slack {
    pub rho0: f64,
    pub theta0: f64,
}

impl Slack {
    pub fn voltage(&self) -> Complex64 {
        Complex64::from_polar(self.rho0, self.theta0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub ext_id: u32,
    pub vmin: f64,
    pub vmax: f64,
    pub regulated: bool,
    pub pl: f64,
    pub ql: f64,
}

/// Line endpoints use internal node indices: regular buses are `0..n`,
/// the slack node is `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    pub b_shunt: f64,
}

impl Line {
    pub fn series_admittance(&self) -> Complex64 {
        Complex64::new(1.0, 0.0) / Complex64::new(self.r, self.x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    /// Internal index of the hosting bus.
    pub bus: usize,
    pub c: f64,
    pub d: f64,
    pub s_rating: f64,
    pub p_av_max: f64,
}

/// Static grid description with internal indexing. Regular buses are numbered
/// `0..n`; the slack node is `n`. Immutable after construction.
#[derive(Debug, Clone)]
pub struct NetworkModel {
    pub base_mva: f64,
    pub slack: Slack,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    /// Sorted by hosting bus index; at most one generator per bus.
    pub generators: Vec<Generator>,
    gen_of_bus: Vec<Option<usize>>,
}

impl NetworkModel {
    /// Number of regular (non-slack) buses.
    pub fn n(&self) -> usize {
        self.buses.len()
    }

    pub fn n_gens(&self) -> usize {
        self.generators.len()
    }

    /// Internal index of the slack node.
    pub fn slack_idx(&self) -> usize {
        self.buses.len()
    }

    /// Generator ordinal hosted at bus `i`, if any.
    pub fn gen_at(&self, bus: usize) -> Option<usize> {
        self.gen_of_bus.get(bus).copied().flatten()
    }

    pub fn is_generator(&self, bus: usize) -> bool {
        self.gen_at(bus).is_some()
    }

    /// Builds a model from a parsed case without running validation.
    pub fn from_case(case: &CaseFile) -> Result<Self> {
        let mut id_to_idx: HashMap<u32, usize> = HashMap::new();
        for (i, b) in case.buses.iter().enumerate() {
            if b.id == 0 {
                return Err(Error::Validation {
                    violations: vec!["bus id 0 is reserved for the slack bus".into()],
                });
            }
            if id_to_idx.insert(b.id, i).is_some() {
                return Err(Error::Validation {
                    violations: vec![format!("duplicate bus id {}", b.id)],
                });
            }
        }
        let n = case.buses.len();
        let resolve = |id: u32, what: &str| -> Result<usize> {
            if id == 0 {
                Ok(n)
            } else {
                id_to_idx.get(&id).copied().ok_or_else(|| Error::Validation {
                    violations: vec![format!("{what} references unknown bus {id}")],
                })
            }
        };

        let buses: Vec<Bus> = case
            .buses
            .iter()
            .map(|b| Bus {
                ext_id: b.id,
                vmin: b.vmin,
                vmax: b.vmax,
                regulated: b.regulated,
                pl: b.pl,
                ql: b.ql,
            })
            .collect();

        let mut lines = Vec::with_capacity(case.lines.len());
        for l in &case.lines {
            lines.push(Line {
                from: resolve(l.from, "line")?,
                to: resolve(l.to, "line")?,
                r: l.r,
                x: l.x,
                b_shunt: l.b_shunt,
            });
        }

        let mut generators = Vec::with_capacity(case.generators.len());
        for g in &case.generators {
            let bus = resolve(g.bus, "generator")?;
            if bus == n {
                return Err(Error::Validation {
                    violations: vec!["generator placed on the slack bus".into()],
                });
            }
            generators.push(Generator {
                bus,
                c: g.c,
                d: g.d,
                s_rating: g.s_rating,
                p_av_max: g.p_av_max,
            });
        }
        generators.sort_by_key(|g| g.bus);

        let mut gen_of_bus = vec![None; n];
        for (k, g) in generators.iter().enumerate() {
            if gen_of_bus[g.bus].replace(k).is_some() {
                return Err(Error::Validation {
                    violations: vec![format!(
                        "multiple generators on bus {}",
                        buses[g.bus].ext_id
                    )],
                });
            }
        }

        Ok(NetworkModel {
            base_mva: case.base_mva,
            slack: Slack {
                rho0: case.slack.rho0,
                theta0: case.slack.theta0,
            },
            buses,
            lines,
            generators,
            gen_of_bus,
        })
    }

    /// External id of regular bus `i`.
    pub fn ext_id(&self, i: usize) -> u32 {
        self.buses[i].ext_id
    }
}

/// Parses and validates a case file. All quantities are taken as per-unit.
pub fn parse_case(path: impl AsRef<Path>) -> Result<NetworkModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let case: CaseFile = serde_json::from_str(&text).map_err(|e| {
        Error::parse_at(
            path.display().to_string(),
            format!("line {}, column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let model = NetworkModel::from_case(&case)?;
    let violations = validate_network(&model);
    if violations.is_empty() {
        Ok(model)
    } else {
        Err(Error::Validation { violations })
    }
}

/// Checks every model invariant and returns a list of human-readable
/// violations; empty means the model is valid.
pub fn validate_network(model: &NetworkModel) -> Vec<String> {
    let mut out = Vec::new();
    let n = model.n();

    if !(model.slack.rho0 > 0.0) {
        out.push("slack voltage magnitude must be positive".into());
    }
    for b in &model.buses {
        if b.regulated && !(0.0 < b.vmin && b.vmin < b.vmax) {
            out.push(format!(
                "bus {}: voltage bounds must satisfy 0 < vmin < vmax",
                b.ext_id
            ));
        }
        if !(b.pl.is_finite() && b.ql.is_finite()) {
            out.push(format!("bus {}: non-finite static load", b.ext_id));
        }
    }
    for (k, l) in model.lines.iter().enumerate() {
        if l.from > n || l.to > n {
            out.push(format!("line {k}: endpoint out of range"));
        }
        if l.from == l.to {
            out.push(format!("line {k}: self loop"));
        }
        if l.r == 0.0 && l.x == 0.0 {
            out.push(format!("line {k}: zero series impedance"));
        }
    }
    for g in &model.generators {
        if !(g.s_rating > 0.0) {
            out.push(format!(
                "generator at bus {}: apparent-power rating must be positive",
                model.buses.get(g.bus).map(|b| b.ext_id).unwrap_or(0)
            ));
        }
        if g.p_av_max < 0.0 {
            out.push(format!(
                "generator at bus {}: negative availability cap",
                model.buses.get(g.bus).map(|b| b.ext_id).unwrap_or(0)
            ));
        }
        if g.c < 0.0 || g.d < 0.0 {
            out.push(format!(
                "generator at bus {}: negative cost coefficient",
                model.buses.get(g.bus).map(|b| b.ext_id).unwrap_or(0)
            ));
        }
    }

    // Connectivity over regular buses plus the slack node.
    if n > 0 {
        let mut parent: Vec<usize> = (0..=n).collect();
        fn find(parent: &mut Vec<usize>, mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        for l in &model.lines {
            if l.from <= n && l.to <= n && l.from != l.to {
                let (a, b) = (find(&mut parent, l.from), find(&mut parent, l.to));
                parent[a] = b;
            }
        }
        let root = find(&mut parent, n);
        if (0..n).any(|v| find(&mut parent, v) != root) {
            out.push("graph not connected".into());
        }
    }

    out
}

// ---------------------------------------------------------------------------
// Admittance assembly
// ---------------------------------------------------------------------------

/// Assembles the full `(n+1) x (n+1)` pi-model bus admittance matrix,
/// slack node last. Off-diagonals are minus the series admittance; diagonals
/// sum incident series admittances plus half the line shunt per end.
pub fn full_admittance(model: &NetworkModel) -> SparseComplex {
    let dim = model.n() + 1;
    let mut y = SparseComplex::zeros(dim);
    for l in &model.lines {
        let ys = l.series_admittance();
        let ysh = Complex64::new(0.0, l.b_shunt / 2.0);
        y.add(l.from, l.from, ys + ysh);
        y.add(l.to, l.to, ys + ysh);
        y.add(l.from, l.to, -ys);
        y.add(l.to, l.from, -ys);
    }
    y.prune();
    y
}

/// The `n x n` admittance matrix over regular buses with the slack
/// row/column folded out. Diagonal terms keep contributions from lines to
/// the slack; the dropped slack coupling is compensated separately by the
/// linear terms of [`ConstantMatrices`] in folded mode.
pub fn build_admittance(model: &NetworkModel) -> SparseComplex {
    let full = full_admittance(model);
    let n = model.n();
    let mut y = SparseComplex::zeros(n);
    for r in 0..n {
        for &(c, v) in full.row(r) {
            if c < n {
                y.add(r, c, v);
            }
        }
    }
    y.prune();
    y
}

// ---------------------------------------------------------------------------
// Constant matrices
// ---------------------------------------------------------------------------

/// Per-bus constant sparse matrices and slack-coupling data, fixed for a
/// given network and slack mode. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct ConstantMatrices {
    mode: SlackMode,
    n: usize,
    n_x: usize,
    p: usize,
    m_mats: Vec<SparseSym>,
    y_mats: Vec<SparseSym>,
    ybar_mats: Vec<SparseSym>,
    /// Folded mode: `kappa[i] = conj(y_{i,slack} * V_slack)`; zero otherwise.
    kappa: Vec<Complex64>,
    /// For each working bus `b`, the regular buses whose injection forms
    /// have a nonzero column at `b`.
    adj: Vec<Vec<usize>>,
    slack_v: Complex64,
}

impl ConstantMatrices {
    pub fn build(model: &NetworkModel, mode: SlackMode) -> Result<Self> {
        let n = model.n();
        let full = full_admittance(model);
        let slack_v = model.slack.voltage();

        let (working, n_x, kappa) = match mode {
            SlackMode::Embedded => (full, n + 1, vec![Complex64::new(0.0, 0.0); n]),
            SlackMode::Folded => {
                let reduced = build_admittance(model);
                let kappa = (0..n)
                    .map(|i| (full.get(i, n) * slack_v).conj())
                    .collect();
                (reduced, n, kappa)
            }
        };

        let p = working.max_row_nnz().max(1);

        let mut m_mats = Vec::with_capacity(n);
        let mut y_mats = Vec::with_capacity(n);
        let mut ybar_mats = Vec::with_capacity(n);
        for i in 0..n {
            let (m_i, y_i, ybar_i) = build_constant_matrices(&working, n_x, i)?;
            m_mats.push(m_i);
            y_mats.push(y_i);
            ybar_mats.push(ybar_i);
        }

        let mut adj = vec![Vec::new(); n_x];
        for i in 0..n {
            for &(c, _) in working.row(i) {
                adj[c].push(i);
            }
            // Row i always affects bus i itself even if y_ii vanished.
            if !adj[i].contains(&i) {
                adj[i].push(i);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }

        Ok(ConstantMatrices {
            mode,
            n,
            n_x,
            p,
            m_mats,
            y_mats,
            ybar_mats,
            kappa,
            adj,
            slack_v,
        })
    }

    pub fn mode(&self) -> SlackMode {
        self.mode
    }

    /// Regular bus count.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Working bus count of the voltage block (`n` folded, `n+1` embedded).
    pub fn n_x(&self) -> usize {
        self.n_x
    }

    /// Maximum row nonzeros of the working admittance matrix.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self, i: usize) -> &SparseSym {
        &self.m_mats[i]
    }

    pub fn y(&self, i: usize) -> &SparseSym {
        &self.y_mats[i]
    }

    pub fn ybar(&self, i: usize) -> &SparseSym {
        &self.ybar_mats[i]
    }

    /// Regular buses whose injection forms couple to working bus `b`.
    pub fn coupled(&self, b: usize) -> &[usize] {
        &self.adj[b]
    }

    pub fn slack_voltage(&self) -> Complex64 {
        self.slack_v
    }

    /// Embedded mode: the two frozen x-coordinate positions (real, imag).
    pub fn frozen_x(&self) -> Option<(usize, usize)> {
        match self.mode {
            SlackMode::Embedded => Some((self.n, self.n_x + self.n)),
            SlackMode::Folded => None,
        }
    }

    /// Linear coefficient of the active injection at bus `i` with respect to
    /// x-coordinate `j` (zero everywhere in embedded mode).
    pub fn omega_coeff(&self, i: usize, j: usize) -> f64 {
        let k = self.kappa[i];
        if j == i {
            k.re
        } else if j == i + self.n_x {
            -k.im
        } else {
            0.0
        }
    }

    /// Linear coefficient of the reactive injection at bus `i` w.r.t. `x_j`.
    pub fn omega_bar_coeff(&self, i: usize, j: usize) -> f64 {
        let k = self.kappa[i];
        if j == i {
            k.im
        } else if j == i + self.n_x {
            k.re
        } else {
            0.0
        }
    }

    /// `omega_i' x`.
    pub fn omega_dot(&self, i: usize, x: &[f64]) -> f64 {
        let k = self.kappa[i];
        k.re * x[i] - k.im * x[i + self.n_x]
    }

    /// `omegabar_i' x`.
    pub fn omega_bar_dot(&self, i: usize, x: &[f64]) -> f64 {
        let k = self.kappa[i];
        k.im * x[i] + k.re * x[i + self.n_x]
    }

    /// Active injection at bus `i`: `tr(Y_i xx') + omega_i' x`.
    pub fn active_injection(&self, i: usize, x: &[f64]) -> f64 {
        self.y_mats[i].quad_form(x) + self.omega_dot(i, x)
    }

    /// Reactive injection at bus `i`: `tr(Ybar_i xx') + omegabar_i' x`.
    pub fn reactive_injection(&self, i: usize, x: &[f64]) -> f64 {
        self.ybar_mats[i].quad_form(x) + self.omega_bar_dot(i, x)
    }

    /// Squared voltage magnitude at bus `i`: `tr(M_i xx')`.
    pub fn magnitude_sq(&self, i: usize, x: &[f64]) -> f64 {
        x[i] * x[i] + x[i + self.n_x] * x[i + self.n_x]
    }
}

/// Builds `(M_i, Y_i, Ybar_i)` for bus `i` from the working admittance
/// matrix, as `2n_x x 2n_x` real symmetric sparse matrices.
pub fn build_constant_matrices(
    y: &SparseComplex,
    n_x: usize,
    i: usize,
) -> Result<(SparseSym, SparseSym, SparseSym)> {
    if i >= y.dim() {
        return Err(Error::IndexOutOfRange {
            context: "constant matrices bus index".into(),
            index: i,
            limit: y.dim(),
        });
    }
    let dim = 2 * n_x;

    let m_i = SparseSym::from_triplets(dim, &[(i, i, 1.0), (i + n_x, i + n_x, 1.0)]);

    let mut ty = Vec::new();
    let mut tb = Vec::new();
    for &(m, v) in y.row(i) {
        let (g, b) = (v.re, v.im);
        if m == i {
            ty.push((i, i, g));
            ty.push((i + n_x, i + n_x, g));
            tb.push((i, i, -b));
            tb.push((i + n_x, i + n_x, -b));
        } else {
            // Active form: symmetric real coupling plus antisymmetric
            // imaginary coupling folded into the off-diagonal blocks.
            ty.push((i, m, g / 2.0));
            ty.push((m, i, g / 2.0));
            ty.push((i + n_x, m + n_x, g / 2.0));
            ty.push((m + n_x, i + n_x, g / 2.0));
            ty.push((i, m + n_x, -b / 2.0));
            ty.push((m + n_x, i, -b / 2.0));
            ty.push((m, i + n_x, b / 2.0));
            ty.push((i + n_x, m, b / 2.0));
            // Reactive form.
            tb.push((i, m, -b / 2.0));
            tb.push((m, i, -b / 2.0));
            tb.push((i + n_x, m + n_x, -b / 2.0));
            tb.push((m + n_x, i + n_x, -b / 2.0));
            tb.push((i, m + n_x, -g / 2.0));
            tb.push((m + n_x, i, -g / 2.0));
            tb.push((m, i + n_x, g / 2.0));
            tb.push((i + n_x, m, g / 2.0));
        }
    }
    let y_i = SparseSym::from_triplets(dim, &ty);
    let ybar_i = SparseSym::from_triplets(dim, &tb);
    Ok((m_i, y_i, ybar_i))
}

/// Checked sparse quadratic form `tr(A xx') = x'Ax`.
pub fn quad_form_trace(a: &SparseSym, x: &[f64]) -> Result<f64> {
    if x.len() != a.dim() {
        return Err(Error::Dimension {
            context: "quadratic form".into(),
            expected: a.dim(),
            got: x.len(),
        });
    }
    Ok(a.quad_form(x))
}

// ---------------------------------------------------------------------------
// Synthetic cases
// ---------------------------------------------------------------------------

/// Parameters for a synthetic path network used by tests and benchmarks.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    /// Regular bus count; the slack attaches to bus 1 (external id).
    pub n: usize,
    /// Generators are placed evenly over the path.
    pub n_gens: usize,
    /// Extra edges (external ids) to raise the maximum nodal degree.
    pub chords: Vec<(u32, u32)>,
    pub vmin: f64,
    pub vmax: f64,
    pub load_p: f64,
    pub load_q: f64,
    pub s_rating: f64,
    pub p_av_max: f64,
    pub cost_c: f64,
    pub cost_d: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n: 5,
            n_gens: 2,
            chords: Vec::new(),
            vmin: 0.95,
            vmax: 1.05,
            load_p: 0.05,
            load_q: 0.015,
            s_rating: 1.0,
            p_av_max: 0.8,
            cost_c: 1.0,
            cost_d: 0.5,
        }
    }
}

/// Builds a chain `slack - 1 - 2 - ... - n` plus optional chords, with
/// uniform loads and evenly spaced generators. Deterministic.
pub fn synthetic_case(spec: &SyntheticSpec) -> Result<NetworkModel> {
    assert!(spec.n >= 1 && spec.n_gens <= spec.n);
    let buses = (1..=spec.n as u32)
        .map(|id| BusSpec {
            id,
            vmin: spec.vmin,
            vmax: spec.vmax,
            regulated: true,
            pl: spec.load_p,
            ql: spec.load_q,
        })
        .collect();

    let mut lines = vec![LineSpec {
        from: 0,
        to: 1,
        r: 0.05,
        x: 0.15,
        b_shunt: 0.0,
    }];
    for id in 1..spec.n as u32 {
        lines.push(LineSpec {
            from: id,
            to: id + 1,
            r: 0.08,
            x: 0.24,
            b_shunt: 0.0,
        });
    }
    for &(a, b) in &spec.chords {
        lines.push(LineSpec {
            from: a,
            to: b,
            r: 0.1,
            x: 0.3,
            b_shunt: 0.0,
        });
    }

    let generators = (1..=spec.n_gens)
        .map(|k| GeneratorSpec {
            bus: ((k * spec.n) / spec.n_gens) as u32,
            c: spec.cost_c,
            d: spec.cost_d,
            s_rating: spec.s_rating,
            p_av_max: spec.p_av_max,
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
    let model = NetworkModel::from_case(&case)?;
    let violations = validate_network(&model);
    if violations.is_empty() {
        Ok(model)
    } else {
        Err(Error::Validation { violations })
    }
}
