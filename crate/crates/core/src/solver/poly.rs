//! Real root extraction for cubics and exact minimization of univariate
//! polynomials of degree at most four over an interval.
//!
//! The cubic solver is a trigonometric/Cardano hybrid chosen by discriminant
//! sign, with one Newton polish step per root and multiplicity collapsing.
//! Minimization enumerates stationary points (roots of the derivative cubic)
//! and finite endpoints; ties are broken toward the candidate closest to
//! zero, i.e. the smallest step.

use crate::error::Error;
use crate::Result;

/// Evaluates `c[0] + c[1] a + ... + c[n] a^n` by Horner's rule.
pub fn poly_eval(coeffs: &[f64], a: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * a + c)
}

fn near(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// All real roots of `a x^3 + b x^2 + c x + d`, sorted ascending with
/// multiplicities collapsed. A vanishing leading coefficient degrades to the
/// quadratic/linear solve; the all-zero polynomial is an error. A linear
/// polynomial with no roots (nonzero constant) yields an empty set.
pub fn cubic_roots(a: f64, b: f64, c: f64, d: f64) -> Result<Vec<f64>> {
    if a == 0.0 && b == 0.0 && c == 0.0 && d == 0.0 {
        return Err(Error::ZeroPolynomial);
    }
    if !(a.is_finite() && b.is_finite() && c.is_finite() && d.is_finite()) {
        return Err(Error::NonFinite {
            context: "cubic coefficients".into(),
        });
    }

    let mut roots = if a == 0.0 {
        quadratic_roots(b, c, d)
    } else {
        let bn = b / a;
        let cn = c / a;
        let dn = d / a;
        // Depressed form t^3 + p t + q with x = t - bn/3.
        let shift = bn / 3.0;
        let p = cn - bn * bn / 3.0;
        let q = 2.0 * bn * bn * bn / 27.0 - bn * cn / 3.0 + dn;

        let disc = -4.0 * p * p * p - 27.0 * q * q;
        let scale = 4.0 * p.abs().powi(3) + 27.0 * q * q;
        let mut ts = Vec::with_capacity(3);
        if p == 0.0 && q == 0.0 {
            ts.push(0.0);
        } else if disc.abs() <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
            // Multiple-root configuration.
            if p == 0.0 {
                ts.push(-q.cbrt());
            } else {
                ts.push(3.0 * q / p);
                ts.push(-1.5 * q / p);
            }
        } else if disc > 0.0 {
            // Three distinct real roots: trigonometric form (p < 0 here).
            let m = 2.0 * (-p / 3.0).sqrt();
            let arg = (3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt();
            let theta = arg.clamp(-1.0, 1.0).acos() / 3.0;
            for k in 0..3 {
                ts.push(m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos());
            }
        } else {
            // One real root: Cardano.
            let srt = (q * q / 4.0 + p * p * p / 27.0).sqrt();
            ts.push((-q / 2.0 + srt).cbrt() + (-q / 2.0 - srt).cbrt());
        }
        ts.into_iter().map(|t| t - shift).collect()
    };

    // One Newton polish step per root, guarded near stationary derivative.
    for r in roots.iter_mut() {
        let f = ((a * *r + b) * *r + c) * *r + d;
        let df = (3.0 * a * *r + 2.0 * b) * *r + c;
        if df.abs() > 1e-12 * (f.abs().max(1.0)) {
            let step = f / df;
            if step.is_finite() {
                *r -= step;
            }
        }
    }

    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|x, y| near(*x, *y, 1e-7));
    Ok(roots)
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        if b == 0.0 {
            // Nonzero constant: no roots (the all-zero case is caught above).
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        Vec::new()
    } else if disc == 0.0 {
        vec![-b / (2.0 * a)]
    } else {
        // Stable form avoiding cancellation in the smaller root.
        let sq = disc.sqrt();
        let u = if b >= 0.0 { -b - sq } else { -b + sq };
        vec![u / (2.0 * a), 2.0 * c / u]
    }
}

/// Global minimizer of a degree <= 4 polynomial over `[lo, hi]` (either side
/// may be infinite). Returns `(argmin, min)`. Configurations unbounded below
/// on an infinite side are an error. Among value ties, the candidate with the
/// smallest absolute position wins.
pub fn minimize_univariate(coeffs: &[f64; 5], lo: f64, hi: f64) -> Result<(f64, f64)> {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite {
            context: "polynomial coefficients".into(),
        });
    }
    assert!(lo <= hi, "empty interval [{lo}, {hi}]");
    if lo == hi {
        return Ok((lo, poly_eval(coeffs, lo)));
    }
    let lo_open = lo == f64::NEG_INFINITY;
    let hi_open = hi == f64::INFINITY;
    let unbounded = |side: &str| -> Error {
        Error::Unbounded {
            coord: format!("degree-{} restriction, {side} side", effective_degree(coeffs)),
        }
    };

    match effective_degree(coeffs) {
        4 => {
            if coeffs[4] < 0.0 && (lo_open || hi_open) {
                return Err(unbounded("either"));
            }
        }
        3 => {
            if coeffs[3] > 0.0 && lo_open {
                return Err(unbounded("lower"));
            }
            if coeffs[3] < 0.0 && hi_open {
                return Err(unbounded("upper"));
            }
        }
        2 => {
            if coeffs[2] < 0.0 && (lo_open || hi_open) {
                return Err(unbounded("either"));
            }
        }
        1 => {
            if coeffs[1] > 0.0 && lo_open {
                return Err(unbounded("lower"));
            }
            if coeffs[1] < 0.0 && hi_open {
                return Err(unbounded("upper"));
            }
        }
        _ => {
            // Constant: every point is optimal; take the one closest to zero.
            let arg = 0.0f64.max(lo).min(hi);
            return Ok((arg, coeffs[0]));
        }
    }

    let mut candidates: Vec<f64> = Vec::with_capacity(5);
    if !lo_open {
        candidates.push(lo);
    }
    if !hi_open {
        candidates.push(hi);
    }
    // Stationary points: roots of the derivative.
    let (da, db, dc, dd) = (4.0 * coeffs[4], 3.0 * coeffs[3], 2.0 * coeffs[2], coeffs[1]);
    if da != 0.0 || db != 0.0 || dc != 0.0 || dd != 0.0 {
        for r in cubic_roots(da, db, dc, dd)? {
            if r >= lo && r <= hi {
                candidates.push(r);
            }
        }
    }
    if candidates.is_empty() {
        // Gradient never vanishes on an open interval: flat polynomial.
        let arg = 0.0f64.max(lo).min(hi);
        return Ok((arg, poly_eval(coeffs, arg)));
    }

    let mut best = (candidates[0], poly_eval(coeffs, candidates[0]));
    for &cand in &candidates[1..] {
        let val = poly_eval(coeffs, cand);
        if val < best.1 && !near(val, best.1, 1e-12) {
            best = (cand, val);
        } else if near(val, best.1, 1e-12) && cand.abs() < best.0.abs() {
            best = (cand, val.min(best.1));
        }
    }
    Ok(best)
}

fn effective_degree(coeffs: &[f64; 5]) -> usize {
    for k in (1..=4).rev() {
        if coeffs[k] != 0.0 {
            return k;
        }
    }
    0
}
