//! Tracking solver for time-varying AC optimal power flow.
//!
//! The library models a power network, lifts the AC optimal power flow into a
//! vector of voltage coordinates plus auxiliary injection/magnitude variables
//! with multipliers, and minimizes the augmented Lagrangian of that lifted
//! problem by randomized coordinate descent. Every coordinate update has a
//! closed form: quartic minimization for voltage and injection coordinates,
//! box-clamped quadratic minimization for magnitude and apparent-power
//! coordinates, and a scaled residual-ascent step for multipliers. Time-varying
//! loads and generation limits are replayed from scenario streams, and the
//! solver reports cost, infeasibility, voltage profiles, and theoretical
//! compute budgets per step.
//!
//! Module map:
//! - [`network`]: case files, admittance assembly, per-bus constant matrices.
//! - [`lifted`]: the lifted decision vector, feasible box, Lagrangian evals.
//! - [`solver`]: coordinate updates, descent loops, diagnostics, flop counts.
//! - [`scenario`]: load/generation time series and zero-order-hold resampling.
//! - [`report`]: tracking reports and CSV/JSON emission.

pub mod error;
pub mod lifted;
pub mod network;
pub mod report;
pub mod scenario;
pub mod solver;
pub mod sparse;

pub use error::Error;
pub use lifted::{BoxSet, Coord, LiftedState, Metrics, ProblemInstance, StateLayout};
pub use network::{CaseFile, ConstantMatrices, NetworkModel, SlackMode};
pub use report::TrackingReport;
pub use scenario::Scenario;
pub use solver::{Lipschitz, SolverConfig, UpdateMode};

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
