//! Floating-point operation accounting and compute-budget bounds.
//!
//! Counting convention (documented so the exact-match tests are meaningful):
//! one flop per add/sub/mul/div/compare on reals, and root extraction at unit
//! cost, so solving one cubic costs [`CUBIC_ROOT_FLOPS`] flops. The ledger
//! charges each coordinate update with the worst-case cost of its class,
//! taking `p` as the bound on admittance row nonzeros:
//!
//! - voltage coordinate: `16(N+N_G)p + 58 N_G + 51 N - 8` flops and 3 cubic
//!   root evaluations (quartic coefficient assembly over every coupled
//!   constraint row plus stationary-point enumeration);
//! - injection coordinate (`t` or `g`) at a generator: `8p + 38` flops and 3
//!   root evaluations; at a non-generator the coordinate is pinned by
//!   projection and charged nothing;
//! - magnitude coordinate `h`: 12 coefficient flops + 2 solve flops;
//! - apparent-power coordinate `z`: 14 + 2 flops;
//! - multiplier coordinates: charged nothing (a scaled residual refresh
//!   outside the per-epoch accounting).
//!
//! Summed over one in-order sweep these charges reproduce the closed-form
//! per-epoch totals of [`flop_counts`] exactly.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Flops for extracting all roots of one univariate cubic when root-taking
/// costs one flop.
pub const CUBIC_ROOT_FLOPS: u64 = 31;

/// Closed-form per-epoch and per-coordinate operation counts for a network
/// with `n` regular buses, `n_g` generators, and row-nonzero bound `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopCounts {
    /// Flops for one sweep over all coordinates, roots counted separately.
    pub per_epoch_flops: u64,
    /// Cubic root evaluations per sweep.
    pub per_epoch_cubic_roots: u64,
    /// Worst-case flops for a single coordinate update with roots folded in
    /// at [`CUBIC_ROOT_FLOPS`] each.
    pub per_coordinate_max: u64,
    /// Cost of one cubic root extraction.
    pub cubic_root_flops: u64,
}

pub fn flop_counts(n: u64, n_g: u64, p: u64) -> FlopCounts {
    assert!(n >= n_g && p >= 1);
    FlopCounts {
        per_epoch_flops: (32 * p + 102) * n * n + (32 * p + 116) * n_g * n - 2 * n
            + (16 * p + 92) * n_g,
        per_epoch_cubic_roots: 6 * (n + n_g),
        per_coordinate_max: 16 * (n + n_g) * p + 58 * n_g + 144 * n - 8,
        cubic_root_flops: CUBIC_ROOT_FLOPS,
    }
}

/// Worst-case per-class charges used by the instrumented solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostModel {
    pub x_flops: u64,
    pub x_roots: u64,
    pub tg_gen_flops: u64,
    pub tg_gen_roots: u64,
    pub h_flops: u64,
    pub z_flops: u64,
}

impl CostModel {
    pub fn new(n: u64, n_g: u64, p: u64) -> Self {
        CostModel {
            x_flops: 16 * (n + n_g) * p + 58 * n_g + 51 * n - 8,
            x_roots: 3,
            tg_gen_flops: 8 * p + 38,
            tg_gen_roots: 3,
            h_flops: 14,
            z_flops: 16,
        }
    }
}

/// Accumulated operation tally of an instrumented run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopLedger {
    pub flops: u64,
    pub cubic_roots: u64,
}

impl FlopLedger {
    pub fn charge(&mut self, flops: u64, roots: u64) {
        self.flops += flops;
        self.cubic_roots += roots;
    }

    /// Total flops with root extractions folded in at unit-root cost.
    pub fn total_with_roots(&self) -> u64 {
        self.flops + self.cubic_roots * CUBIC_ROOT_FLOPS
    }
}

/// Inputs of the compute-budget bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Initial suboptimality gap.
    pub sigma_l: f64,
    /// Conditioning ratio `d L / sigma` of the growth inequality.
    pub sigma_p: f64,
    /// Per-step drift bound on the Lagrangian.
    pub drift: f64,
    /// Target expected error.
    pub error_target: f64,
    pub n: u64,
    pub n_g: u64,
    pub p: u64,
}

/// Budget value and a flag raised when the formula produced a non-positive
/// count (the bound is returned as printed rather than reinterpreted).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetEstimate {
    pub flops: f64,
    pub non_positive: bool,
}

/// Flops to perform between two input updates so the expected error stays
/// below the target: `[16(N+N_G)p + 58 N_G + 144 N - 8] * log(E - 2 e
/// sigma_p) / log(sigma_l)`. Requires `sigma_l > 1` and
/// `E > 2 e sigma_p`; violations are named errors.
pub fn budget_for_error(inputs: &BoundInputs) -> Result<BudgetEstimate> {
    if !(inputs.sigma_l > 1.0) {
        return Err(Error::Domain(format!(
            "budget bound requires sigma_l > 1, got {}",
            inputs.sigma_l
        )));
    }
    let log_arg = inputs.error_target - 2.0 * inputs.drift * inputs.sigma_p;
    if !(log_arg > 0.0) {
        return Err(Error::Domain(format!(
            "budget bound requires error_target > 2*drift*sigma_p, got {} <= {}",
            inputs.error_target,
            2.0 * inputs.drift * inputs.sigma_p
        )));
    }
    let per_coord = flop_counts(inputs.n, inputs.n_g, inputs.p).per_coordinate_max as f64;
    let flops = per_coord * log_arg.ln() / inputs.sigma_l.ln();
    Ok(BudgetEstimate {
        flops,
        non_positive: flops <= 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinned_example_counts() {
        let f = flop_counts(2, 1, 2);
        assert_eq!(f.per_epoch_flops, 1144);
        assert_eq!(f.per_epoch_cubic_roots, 18);
        // 16*3*2 + 58 + 288 - 8
        assert_eq!(f.per_coordinate_max, 434);
        assert_eq!(f.cubic_root_flops, 31);
    }

    #[test]
    fn class_charges_sum_to_epoch_formula() {
        for (n, n_g, p) in [(2u64, 1u64, 2u64), (5, 2, 3), (37, 18, 4), (118, 54, 5)] {
            let cm = CostModel::new(n, n_g, p);
            let flops =
                2 * n * cm.x_flops + 2 * n_g * cm.tg_gen_flops + n * cm.h_flops + n_g * cm.z_flops;
            let roots = 2 * n * cm.x_roots + 2 * n_g * cm.tg_gen_roots;
            let f = flop_counts(n, n_g, p);
            assert_eq!(flops, f.per_epoch_flops, "n={n} n_g={n_g} p={p}");
            assert_eq!(roots, f.per_epoch_cubic_roots);
        }
    }

    #[test]
    fn budget_zero_at_unit_log_argument() {
        let b = budget_for_error(&BoundInputs {
            sigma_l: 3.0,
            sigma_p: 2.0,
            drift: 0.25,
            error_target: 2.0 * 0.25 * 2.0 + 1.0,
            n: 2,
            n_g: 1,
            p: 2,
        })
        .unwrap();
        assert_eq!(b.flops, 0.0);
        assert!(b.non_positive);
    }

    #[test]
    fn budget_domain_violations() {
        let base = BoundInputs {
            sigma_l: 1.5,
            sigma_p: 2.0,
            drift: 0.5,
            error_target: 1.0,
            n: 2,
            n_g: 1,
            p: 2,
        };
        // error_target <= 2*drift*sigma_p = 2.0
        let err = budget_for_error(&base).unwrap_err();
        assert!(err.to_string().contains("error_target"));
        let err = budget_for_error(&BoundInputs {
            sigma_l: 0.9,
            error_target: 5.0,
            ..base
        })
        .unwrap_err();
        assert!(err.to_string().contains("sigma_l"));
    }

    #[test]
    fn ledger_totals() {
        let mut ledger = FlopLedger::default();
        ledger.charge(100, 2);
        ledger.charge(28, 1);
        assert_eq!(ledger.flops, 128);
        assert_eq!(ledger.cubic_roots, 3);
        assert_eq!(ledger.total_with_roots(), 128 + 3 * 31);
    }
}
