//! Minimal sparse matrix types for the per-bus quadratic forms.
//!
//! The solver only ever needs three operations on the constant matrices:
//! the quadratic form value x'Ax, one row-vector product (Ax)_j, and one
//! diagonal entry. Rows are stored fully (both triangles of the symmetric
//! pattern) and sorted by column, so each is O(row nnz).

use num_complex::Complex64;

/// Real symmetric sparse matrix, row-major with both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    dim: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseSym {
    /// Builds from (row, col, value) triplets. Duplicate positions are summed,
    /// exact zeros dropped. Panics if the result is not symmetric; callers
    /// construct these from closed-form symmetric patterns.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); dim];
        for &(r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r},{c}) outside dim {dim}");
            rows[r].push((c, v));
        }
        for row in &mut rows {
            row.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for &(c, v) in row.iter() {
                match merged.last_mut() {
                    Some((lc, lv)) if *lc == c => *lv += v,
                    _ => merged.push((c, v)),
                }
            }
            merged.retain(|&(_, v)| v != 0.0);
            *row = merged;
        }
        let m = SparseSym { dim, rows };
        debug_assert!(m.is_symmetric(1e-14), "non-symmetric construction");
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, r: usize) -> &[(usize, f64)] {
        &self.rows[r]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.rows[r]
            .binary_search_by_key(&c, |&(col, _)| col)
            .map(|k| self.rows[r][k].1)
            .unwrap_or(0.0)
    }

    pub fn diag(&self, j: usize) -> f64 {
        self.get(j, j)
    }

    /// (Ax)_j via the stored row j.
    pub fn row_dot(&self, j: usize, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.rows[j].iter().map(|&(c, v)| v * x[c]).sum()
    }

    /// Quadratic form x'Ax = tr(A xx').
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut acc = 0.0;
        for (r, row) in self.rows.iter().enumerate() {
            if row.is_empty() {
                continue;
            }
            let xr = x[r];
            if xr != 0.0 {
                let mut s = 0.0;
                for &(c, v) in row {
                    s += v * x[c];
                }
                acc += xr * s;
            }
        }
        acc
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|j| self.diag(j)).sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                if (v - self.get(c, r)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.dim]; self.dim];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                d[r][c] = v;
            }
        }
        d
    }

    pub fn iter_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
    }
}

/// Complex sparse matrix in row-major form, used for the bus admittance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseComplex {
    dim: usize,
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl SparseComplex {
    pub fn zeros(dim: usize) -> Self {
        SparseComplex {
            dim,
            rows: vec![Vec::new(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add(&mut self, r: usize, c: usize, v: Complex64) {
        assert!(r < self.dim && c < self.dim);
        match self.rows[r].binary_search_by_key(&c, |&(col, _)| col) {
            Ok(k) => self.rows[r][k].1 += v,
            Err(k) => self.rows[r].insert(k, (c, v)),
        }
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.rows[r]
            .binary_search_by_key(&c, |&(col, _)| col)
            .map(|k| self.rows[r][k].1)
            .unwrap_or_else(|_| Complex64::new(0.0, 0.0))
    }

    pub fn row(&self, r: usize) -> &[(usize, Complex64)] {
        &self.rows[r]
    }

    /// Drops entries whose magnitude is exactly zero.
    pub fn prune(&mut self) {
        for row in &mut self.rows {
            row.retain(|&(_, v)| v.norm_sqr() != 0.0);
        }
    }

    /// Maximum number of stored nonzeros over all rows.
    pub fn max_row_nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).max().unwrap_or(0)
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut d = vec![vec![Complex64::new(0.0, 0.0); self.dim]; self.dim];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                d[r][c] = v;
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quad_form_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let dim = rng.gen_range(2..10);
            let mut triplets = Vec::new();
            for r in 0..dim {
                for c in r..dim {
                    if rng.gen_bool(0.4) {
                        let v: f64 = rng.gen_range(-2.0..2.0);
                        triplets.push((r, c, v));
                        if c != r {
                            triplets.push((c, r, v));
                        }
                    }
                }
            }
            let a = SparseSym::from_triplets(dim, &triplets);
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dense = a.to_dense();
            let mut want = 0.0;
            for r in 0..dim {
                for c in 0..dim {
                    want += x[r] * dense[r][c] * x[c];
                }
            }
            let got = a.quad_form(&x);
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let a = SparseSym::from_triplets(2, &[(0, 1, 1.0), (0, 1, 0.5), (1, 0, 1.5)]);
        assert_eq!(a.get(0, 1), 1.5);
        assert_eq!(a.get(1, 0), 1.5);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn exact_zero_entries_are_dropped() {
        let a = SparseSym::from_triplets(2, &[(0, 0, 1.0), (1, 1, 0.0)]);
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.diag(1), 0.0);
    }

    #[test]
    fn complex_add_accumulates() {
        let mut y = SparseComplex::zeros(3);
        y.add(0, 1, Complex64::new(1.0, -2.0));
        y.add(0, 1, Complex64::new(0.5, 0.5));
        assert_eq!(y.get(0, 1), Complex64::new(1.5, -1.5));
        assert_eq!(y.max_row_nnz(), 1);
    }
}
