//! Randomized coordinate descent on the augmented Lagrangian.
//!
//! Two update rules are available. `Exact` minimizes the univariate
//! restriction of the Lagrangian in closed form: a quartic for voltage and
//! generator-injection coordinates (stationary points from one cubic solve),
//! a box-clamped quadratic for magnitude and apparent-power coordinates.
//! `Prox` takes the box-projected gradient step `clamp(xi_i - grad/L) - xi_i`.
//! Multiplier coordinates are linear in the Lagrangian, so both modes give
//! them the projected step, which is a scaled residual ascent.
//!
//! The solver loop is single-threaded over one state vector; per time step it
//! reads one immutable instance snapshot, so scenario refresh can happen
//! concurrently.

pub mod flops;
pub mod poly;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::lifted::{
    self, coord_curvature, coord_gradient, initial_state, restriction_poly, BoxSet, Coord,
    LiftedState, Metrics, ProblemInstance,
};
use crate::network::{ConstantMatrices, NetworkModel};
use crate::scenario::{instance_at, solver_steps, Scenario};
use crate::Result;

pub use flops::{
    budget_for_error, flop_counts, BoundInputs, BudgetEstimate, CostModel, FlopCounts, FlopLedger,
};
pub use poly::{cubic_roots, minimize_univariate, poly_eval};

/// Coordinate update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateMode {
    /// Closed-form minimization of the univariate restriction.
    Exact,
    /// Box-projected gradient step with step size `1/L`.
    Prox,
}

impl std::fmt::Display for UpdateMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UpdateMode::Exact => write!(f, "exact"),
            UpdateMode::Prox => write!(f, "prox"),
        }
    }
}

impl std::str::FromStr for UpdateMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(UpdateMode::Exact),
            "prox" => Ok(UpdateMode::Prox),
            other => Err(Error::Domain(format!("unknown update mode '{other}'"))),
        }
    }
}

/// Coordinate-wise Lipschitz constant handling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Lipschitz {
    Fixed(f64),
    /// Refreshed from the maximum coordinate curvature at the current
    /// iterate, times a 1.1 safety factor: per epoch in static runs, per
    /// time step while tracking.
    Auto,
}

impl std::fmt::Display for Lipschitz {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Lipschitz::Fixed(l) => write!(f, "{l}"),
            Lipschitz::Auto => write!(f, "auto"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Penalty weight, in `[0, mu_max]`.
    pub mu: f64,
    pub mu_max: f64,
    pub mode: UpdateMode,
    pub seed: u64,
    /// Coordinate updates per time step while tracking.
    pub budget: usize,
    pub lipschitz: Lipschitz,
    /// Ball radius for Lipschitz estimation diagnostics.
    pub ball_radius: f64,
    /// States sampled per step for the drift estimate.
    pub drift_samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mu: 1.0,
            mu_max: 10.0,
            mode: UpdateMode::Exact,
            seed: 0,
            budget: 200,
            lipschitz: Lipschitz::Auto,
            ball_radius: 1.0,
            drift_samples: 4,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget < 1 {
            return Err(Error::Domain("budget must be at least 1".into()));
        }
        if !(self.mu >= 0.0 && self.mu <= self.mu_max) {
            return Err(Error::Domain(format!(
                "mu must lie in [0, {}], got {}",
                self.mu_max, self.mu
            )));
        }
        if let Lipschitz::Fixed(l) = self.lipschitz {
            if !(l > 0.0) {
                return Err(Error::Domain("fixed Lipschitz constant must be positive".into()));
            }
        }
        if !(self.ball_radius > 0.0) {
            return Err(Error::Domain("ball radius must be positive".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Single-coordinate updates
// ---------------------------------------------------------------------------

fn coord_name(layout: &crate::lifted::StateLayout, flat: usize) -> String {
    format!("{:?}", layout.unpack(flat))
}

fn is_multiplier(layout: &crate::lifted::StateLayout, flat: usize) -> bool {
    matches!(
        layout.unpack(flat),
        Coord::LamT(_) | Coord::LamG(_) | Coord::LamH(_) | Coord::LamZ(_)
    )
}

/// Multiplier update `lam <- lam - r/L`, the residual-proportional ascent of
/// the method of multipliers (with this Lagrangian's `-lam * r` sign, the
/// residual is minus the lambda-gradient). The step raises the Lagrangian by
/// `r^2/L`; a plain descent step on a coordinate the Lagrangian is linear in
/// would run off to minus infinity instead of closing the residual.
pub fn multiplier_step(
    state: &mut LiftedState,
    flat: usize,
    mu: f64,
    inst: &ProblemInstance,
    lipschitz: f64,
) -> f64 {
    debug_assert!(lipschitz > 0.0);
    let g = coord_gradient(state, mu, inst, flat); // equals -residual
    let step = g / lipschitz;
    state.as_mut_slice()[flat] += step;
    step
}

/// Exact closed-form update of one coordinate. Returns the applied step.
/// Voltage and injection coordinates minimize their quartic restriction over
/// the box interval, magnitude and apparent-power coordinates their
/// quadratic; multipliers take the projected gradient step with `1/lipschitz`.
/// Never increases `L + chi` except through multiplier coordinates.
pub fn coord_update_exact(
    state: &mut LiftedState,
    flat: usize,
    mu: f64,
    inst: &ProblemInstance,
    box_set: &BoxSet,
    lipschitz: f64,
) -> Result<f64> {
    let layout = state.layout();
    if is_multiplier(&layout, flat) {
        return Ok(multiplier_step(state, flat, mu, inst, lipschitz));
    }
    let coeffs = restriction_poly(state, mu, inst, flat);
    let cur = state.as_slice()[flat];
    let (lo, hi) = box_set.interval(flat);
    let (step, predicted) =
        minimize_univariate(&coeffs, lo - cur, hi - cur).map_err(|e| match e {
            Error::Unbounded { .. } => Error::Unbounded {
                coord: coord_name(&layout, flat),
            },
            other => other,
        })?;
    debug_assert!(
        predicted <= 1e-10,
        "exact update increased the restriction by {predicted}"
    );
    state.as_mut_slice()[flat] = cur + step;
    Ok(step)
}

/// Projected gradient step `clamp(xi_i - grad/L, lo, hi) - xi_i` applied to
/// one primal coordinate; multiplier coordinates take [`multiplier_step`].
/// Returns the applied step.
pub fn coord_update_prox(
    state: &mut LiftedState,
    flat: usize,
    mu: f64,
    inst: &ProblemInstance,
    box_set: &BoxSet,
    lipschitz: f64,
) -> f64 {
    debug_assert!(lipschitz > 0.0);
    if is_multiplier(&state.layout(), flat) {
        return multiplier_step(state, flat, mu, inst, lipschitz);
    }
    let g = coord_gradient(state, mu, inst, flat);
    let cur = state.as_slice()[flat];
    let target = box_set.clamp(flat, cur - g / lipschitz);
    let step = target - cur;
    debug_assert!(
        g * step + 0.5 * lipschitz * step * step <= 1e-10,
        "prox step violated the model decrease"
    );
    state.as_mut_slice()[flat] = target;
    step
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

/// Owns the RNG, the flop ledger, and the working Lipschitz constant of one
/// descent run. The lifted state is passed in and out explicitly.
pub struct Engine {
    config: SolverConfig,
    rng: ChaCha8Rng,
    free: Vec<usize>,
    cost_model: CostModel,
    pub ledger: FlopLedger,
    lipschitz: f64,
    pub descent_violations: usize,
}

impl Engine {
    pub fn new(inst: &ProblemInstance, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        inst.validate()?;
        let layout = inst.layout();
        let frozen = inst.matrices.frozen_x();
        let free = (0..layout.dim())
            .filter(|&j| match frozen {
                Some((re, im)) => j != layout.x(re) && j != layout.x(im),
                None => true,
            })
            .collect();
        let cost_model = CostModel::new(
            inst.model.n() as u64,
            inst.model.n_gens() as u64,
            inst.matrices.p() as u64,
        );
        let lipschitz = match config.lipschitz {
            Lipschitz::Fixed(l) => l,
            Lipschitz::Auto => f64::NAN, // refreshed before first use
        };
        Ok(Engine {
            config: config.clone(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            free,
            cost_model,
            ledger: FlopLedger::default(),
            lipschitz,
            descent_violations: 0,
        })
    }

    /// Count of non-frozen coordinates.
    pub fn free_dim(&self) -> usize {
        self.free.len()
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Auto mode: set `L` to 1.1 times the largest coordinate curvature at
    /// the iterate, floored away from zero.
    pub fn refresh_lipschitz(&mut self, state: &LiftedState, inst: &ProblemInstance) {
        if let Lipschitz::Fixed(_) = self.config.lipschitz {
            return;
        }
        let mut max_curv = 0.0f64;
        for flat in 0..state.layout().dim() {
            max_curv = max_curv.max(coord_curvature(state, self.config.mu, inst, flat).abs());
        }
        self.lipschitz = (1.1 * max_curv).max(1e-6);
    }

    fn ensure_lipschitz(&mut self, state: &LiftedState, inst: &ProblemInstance) {
        if !self.lipschitz.is_finite() {
            self.refresh_lipschitz(state, inst);
        }
    }

    fn charge_for(&mut self, layout: &crate::lifted::StateLayout, inst: &ProblemInstance, flat: usize) {
        match layout.unpack(flat) {
            Coord::X(_) => self
                .ledger
                .charge(self.cost_model.x_flops, self.cost_model.x_roots),
            Coord::T(i) | Coord::G(i) => {
                if inst.model.is_generator(i) {
                    self.ledger
                        .charge(self.cost_model.tg_gen_flops, self.cost_model.tg_gen_roots);
                }
            }
            Coord::H(_) => self.ledger.charge(self.cost_model.h_flops, 0),
            Coord::Z(_) => self.ledger.charge(self.cost_model.z_flops, 0),
            Coord::LamT(_) | Coord::LamG(_) | Coord::LamH(_) | Coord::LamZ(_) => {}
        }
    }

    /// Applies the configured update to one coordinate and charges its class
    /// cost. Frozen coordinates are skipped.
    pub fn update_once(
        &mut self,
        state: &mut LiftedState,
        inst: &ProblemInstance,
        box_set: &BoxSet,
        flat: usize,
    ) -> Result<()> {
        self.ensure_lipschitz(state, inst);
        let layout = state.layout();
        if let Some((re, im)) = inst.matrices.frozen_x() {
            if flat == layout.x(re) || flat == layout.x(im) {
                return Ok(());
            }
        }
        if is_multiplier(&layout, flat) {
            multiplier_step(state, flat, self.config.mu, inst, self.lipschitz);
        } else {
            match self.config.mode {
                UpdateMode::Exact => {
                    // Track violations of the per-update non-increase contract.
                    let coeffs = restriction_poly(state, self.config.mu, inst, flat);
                    let cur = state.as_slice()[flat];
                    let (lo, hi) = box_set.interval(flat);
                    let (step, predicted) = minimize_univariate(&coeffs, lo - cur, hi - cur)
                        .map_err(|e| match e {
                            Error::Unbounded { .. } => Error::Unbounded {
                                coord: coord_name(&layout, flat),
                            },
                            other => other,
                        })?;
                    if predicted > 1e-10 {
                        self.descent_violations += 1;
                    }
                    state.as_mut_slice()[flat] = cur + step;
                }
                UpdateMode::Prox => {
                    coord_update_prox(state, flat, self.config.mu, inst, box_set, self.lipschitz);
                }
            }
        }
        self.charge_for(&layout, inst, flat);
        Ok(())
    }

    /// One epoch: visits every coordinate in increasing order.
    pub fn epoch(
        &mut self,
        state: &mut LiftedState,
        inst: &ProblemInstance,
        box_set: &BoxSet,
    ) -> Result<()> {
        for flat in 0..state.layout().dim() {
            self.update_once(state, inst, box_set, flat)?;
        }
        Ok(())
    }

    /// Runs `n` randomized updates, drawing coordinates uniformly from the
    /// non-frozen set. Optionally records the Lagrangian after each update.
    pub fn run_updates(
        &mut self,
        state: &mut LiftedState,
        inst: &ProblemInstance,
        box_set: &BoxSet,
        n: usize,
        mut record: Option<&mut Vec<f64>>,
    ) -> Result<()> {
        for _ in 0..n {
            let flat = self.free[self.rng.gen_range(0..self.free.len())];
            self.update_once(state, inst, box_set, flat)?;
            if let Some(rec) = record.as_deref_mut() {
                let l = lifted::eval_lagrangian(state, self.config.mu, inst)?;
                rec.push(l);
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Static solve and tracking
// ---------------------------------------------------------------------------

/// Trajectory of a fixed-instance descent run.
#[derive(Debug, Clone)]
pub struct StaticRun {
    /// Lagrangian value before the first update and after each update.
    pub l_values: Vec<f64>,
    pub state: LiftedState,
    pub ledger: FlopLedger,
    pub descent_violations: usize,
    pub lipschitz: f64,
}

/// Runs randomized coordinate descent on a constant instance for `n_updates`
/// coordinate updates, recording the Lagrangian per iteration. The start
/// state defaults to the projected flat start.
pub fn solve_static(
    inst: &ProblemInstance,
    config: &SolverConfig,
    n_updates: usize,
    init: Option<LiftedState>,
) -> Result<StaticRun> {
    let mut engine = Engine::new(inst, config)?;
    let box_set = inst.box_set();
    let mut state = init.unwrap_or_else(|| initial_state(inst));
    box_set.project(&mut state);
    engine.refresh_lipschitz(&state, inst);

    let mut l_values = Vec::with_capacity(n_updates + 1);
    l_values.push(lifted::eval_lagrangian(&state, config.mu, inst)?);
    let epoch_len = engine.free_dim().max(1);
    let mut done = 0;
    while done < n_updates {
        let chunk = epoch_len.min(n_updates - done);
        engine.run_updates(&mut state, inst, &box_set, chunk, Some(&mut l_values))?;
        done += chunk;
        if let Lipschitz::Auto = config.lipschitz {
            engine.refresh_lipschitz(&state, inst);
        }
    }
    Ok(StaticRun {
        l_values,
        state,
        ledger: engine.ledger,
        descent_violations: engine.descent_violations,
        lipschitz: engine.lipschitz,
    })
}

/// Per-step output of a tracking run.
#[derive(Debug, Clone)]
pub struct TrackStep {
    pub k: usize,
    /// Solver wall time `k / solver_hz`, seconds.
    pub solver_time: f64,
    /// Timestamp of the data sample the step solved against.
    pub data_time: f64,
    pub l_value: f64,
    pub metrics: Metrics,
    pub flops_cumulative: u64,
    pub cubic_roots_cumulative: u64,
    /// Sampled lower bound on the step-to-step Lagrangian drift.
    pub drift_estimate: f64,
    /// A failed step is recorded and tracking continues from the projected
    /// state.
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct TrackRun {
    pub steps: Vec<TrackStep>,
    pub state: LiftedState,
    pub descent_violations: usize,
}

/// Replays a scenario at `solver_hz`, warm-starting each step from the
/// previous state and spending `config.budget` coordinate updates per step.
pub fn track(
    model: &std::sync::Arc<NetworkModel>,
    matrices: &std::sync::Arc<ConstantMatrices>,
    scenario: &Scenario,
    config: &SolverConfig,
    solver_hz: f64,
) -> Result<TrackRun> {
    let n_steps = solver_steps(scenario, solver_hz);
    if n_steps == 0 {
        return Err(Error::Domain("empty tracking horizon".into()));
    }
    let first = instance_at(scenario, model, matrices, 0, solver_hz)?;
    let mut engine = Engine::new(&first, config)?;
    let mut drift_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut state = initial_state(&first);
    let mut prev_inst: Option<ProblemInstance> = None;
    let mut steps = Vec::with_capacity(n_steps);

    for k in 0..n_steps {
        let inst = instance_at(scenario, model, matrices, k, solver_hz)?;
        let box_set = inst.box_set();
        box_set.project(&mut state);
        engine.refresh_lipschitz(&state, &inst);

        let drift_estimate = match &prev_inst {
            Some(prev) => {
                let mut samples = vec![state.clone()];
                for _ in 1..config.drift_samples.max(1) {
                    let mut s = state.clone();
                    for v in s.as_mut_slice().iter_mut() {
                        *v += drift_rng.gen_range(-0.1..0.1);
                    }
                    box_set.project(&mut s);
                    samples.push(s);
                }
                estimate_drift(&inst, prev, config.mu, &samples)
            }
            None => 0.0,
        };

        let error = engine
            .run_updates(&mut state, &inst, &box_set, config.budget, None)
            .err()
            .map(|e| e.to_string());
        if error.is_some() {
            box_set.project(&mut state);
        }

        let l_value = lifted::eval_lagrangian(&state, config.mu, &inst)?;
        steps.push(TrackStep {
            k,
            solver_time: k as f64 / solver_hz,
            data_time: inst.timestamp,
            l_value,
            metrics: lifted::eval_metrics(&state, &inst),
            flops_cumulative: engine.ledger.flops,
            cubic_roots_cumulative: engine.ledger.cubic_roots,
            drift_estimate,
            error,
        });
        prev_inst = Some(inst);
    }
    Ok(TrackRun {
        steps,
        state,
        descent_violations: engine.descent_violations,
    })
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

/// Samples `|d^2 L / d xi_i^2|` over points of the ball `B_r(center)`
/// (center included) and all coordinates, times a 1.1 safety factor.
pub fn estimate_lipschitz(
    center: &LiftedState,
    radius: f64,
    mu: f64,
    inst: &ProblemInstance,
    samples: usize,
    seed: u64,
) -> f64 {
    assert!(radius > 0.0 && samples >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = center.layout().dim();
    let mut max_curv = 0.0f64;
    let mut probe = |state: &LiftedState| {
        for flat in 0..dim {
            max_curv = max_curv.max(coord_curvature(state, mu, inst, flat).abs());
        }
    };
    probe(center);
    for _ in 1..samples {
        // Uniform direction scaled by a radius fraction keeps the sample in
        // the ball.
        let dir: Vec<f64> = (0..dim).map(|_| rng.sample(BoxMuller)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let scale = radius * rng.gen_range(0.0..1.0) / norm;
        let mut s = center.clone();
        for (v, d) in s.as_mut_slice().iter_mut().zip(&dir) {
            *v += scale * d;
        }
        probe(&s);
    }
    1.1 * max_curv
}

// Standard normal via Box-Muller to avoid an extra dependency.
struct BoxMuller;

impl rand::distributions::Distribution<f64> for BoxMuller {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Half the proximal gradient gap `D(xi, L) / 2`: solves the separable prox
/// subproblem exactly per coordinate (box-projected gradient step) and
/// assembles `-2L * (inner objective) / 2`. Nonnegative; zero exactly at
/// box-stationary points.
pub fn pl_gap(
    state: &LiftedState,
    lipschitz: f64,
    mu: f64,
    inst: &ProblemInstance,
    box_set: &BoxSet,
) -> f64 {
    assert!(lipschitz > 0.0);
    debug_assert!(box_set.contains(state, 1e-9));
    let dim = state.layout().dim();
    let mut inner = 0.0;
    for flat in 0..dim {
        let g = coord_gradient(state, mu, inst, flat);
        let cur = state.as_slice()[flat];
        let s = box_set.clamp(flat, cur - g / lipschitz) - cur;
        inner += g * s + 0.5 * lipschitz * s * s;
    }
    let half_gap = -lipschitz * inner;
    half_gap.max(0.0)
}

/// Maximum absolute Lagrangian change between two instances over the given
/// probe states; an explicit lower bound on the true drift supremum.
pub fn estimate_drift(
    inst_k: &ProblemInstance,
    inst_km1: &ProblemInstance,
    mu: f64,
    states: &[LiftedState],
) -> f64 {
    states
        .iter()
        .map(|s| {
            (lifted::lagrangian_value(s, mu, inst_k) - lifted::lagrangian_value(s, mu, inst_km1))
                .abs()
        })
        .fold(0.0, f64::max)
}
