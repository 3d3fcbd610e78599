use std::collections::BTreeMap;

use crate::{Error, Result};

/// Real symmetric matrix stored by its upper triangle.
///
/// A full symmetric CSR copy is kept alongside the triangle so products sweep
/// rows contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct RealSymmetricSparse {
    dim: usize,
    upper: Vec<(usize, usize, f64)>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl RealSymmetricSparse {
    /// Builds from upper-triangular triplets. Rejects `i > j`, out-of-range
    /// indices, duplicates and non-finite values.
    pub fn from_upper_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, j, v) in triplets {
            if i > j {
                return Err(Error::InvalidParameter(format!("entry ({i}, {j}) is below the diagonal")));
            }
            if j >= dim {
                return Err(Error::DimensionMismatch(format!("entry ({i}, {j}) outside dimension {dim}")));
            }
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite entry at ({i}, {j})")));
            }
            if map.insert((i, j), v).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate entry ({i}, {j})")));
            }
        }
        Ok(Self::from_map(dim, map))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_map(dim, (0..dim).map(|i| ((i, i), 1.0)).collect())
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self::from_map(diag.len(), diag.iter().enumerate().map(|(i, &v)| ((i, i), v)).collect())
    }

    /// Takes the upper triangle of a dense row-major matrix, dropping exact zeros.
    pub fn from_dense_upper(dim: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!("dense matrix needs {} entries", dim * dim)));
        }
        Self::from_upper_triplets(
            dim,
            (0..dim).flat_map(|i| (i..dim).map(move |j| (i, j))).filter_map(|(i, j)| {
                let v = dense[i * dim + j];
                (v != 0.0).then_some((i, j, v))
            }),
        )
    }

    fn from_map(dim: usize, map: BTreeMap<(usize, usize), f64>) -> Self {
        let upper: Vec<_> = map.into_iter().map(|((i, j), v)| (i, j, v)).collect();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        for &(i, j, v) in &upper {
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            dim,
            upper,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored `(i, j, value)` entries with `i <= j`, sorted.
    pub fn upper_entries(&self) -> &[(usize, usize, f64)] {
        &self.upper
    }

    pub fn nnz_upper(&self) -> usize {
        self.upper.len()
    }

    /// Entries of row `i` of the full symmetric matrix.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.upper
            .binary_search_by(|&(a, b, _)| (a, b).cmp(&(i, j)))
            .map(|k| self.upper[k].2)
            .unwrap_or(0.0)
    }

    /// Full row sums `sum_j A_ij`.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut out);
        out
    }

    fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.dim, "vector length does not match matrix dimension");
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// `x^T A x`.
    pub fn quadratic(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        (0..self.dim).map(|i| x[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>()).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut d = vec![0.0; n * n];
        for &(i, j, v) in &self.upper {
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
        d
    }
}

/// Accumulates symmetric entries in any order; `(i, j)` and `(j, i)` land in
/// the same slot and are summed.
#[derive(Debug, Default)]
pub struct SymmetricBuilder {
    dim: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl SymmetricBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.dim && j < self.dim, "entry ({i}, {j}) outside dimension {}", self.dim);
        *self.entries.entry((i.min(j), i.max(j))).or_insert(0.0) += v;
    }

    pub fn build(self) -> RealSymmetricSparse {
        let map = self.entries.into_iter().filter(|&(_, v)| v != 0.0).collect();
        RealSymmetricSparse::from_map(self.dim, map)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const CG_TARGET: f64 = 1e-13;
const CG_ACCEPT: f64 = 1e-10;
const RESIDUAL_REFRESH: usize = 25;

/// Conjugate-gradient solve of `a x = b` for symmetric positive-definite `a`.
///
/// A non-positive curvature `p^T A p <= 0` is reported as
/// [`Error::NotPositiveDefinite`]. The true residual is recomputed
/// periodically and on exit; the result satisfies `||a x - b|| <= 1e-10 ||b||`.
pub fn solve_spd(a: &RealSymmetricSparse, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!("rhs has length {}, matrix is {n}x{n}", b.len())));
    }
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let max_iter = 20 * n + 100;

    for iter in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "conjugate gradient breakdown at iteration {iter} (p^T A p = {curvature:e})"
            )));
        }
        let step = rr / curvature;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        if iter % RESIDUAL_REFRESH == 0 {
            let ax = a.mul_vec(&x);
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
        }
        let rr_next = dot(&r, &r);
        if rr_next.sqrt() <= CG_TARGET * b_norm {
            break;
        }
        let beta = rr_next / rr;
        rr = rr_next;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }

    let ax = a.mul_vec(&x);
    let residual = ax.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
    if residual > CG_ACCEPT * b_norm {
        return Err(Error::NoConvergence(format!(
            "conjugate gradient residual {residual:e} above {CG_ACCEPT:e} * ||b||"
        )));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_returns_rhs() {
        let b = vec![0.3, -1.2, 4.0];
        let x = solve_spd(&RealSymmetricSparse::identity(3), &b).unwrap();
        for (u, v) in x.iter().zip(&b) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_system() {
        let x = solve_spd(&RealSymmetricSparse::diagonal(&[2.0, 4.0]), &[2.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn indefinite_matrix_breaks_down() {
        let a = RealSymmetricSparse::diagonal(&[1.0, -1.0]);
        assert!(matches!(solve_spd(&a, &[1.0, 1.0]), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn dimension_mismatch() {
        let a = RealSymmetricSparse::identity(2);
        assert!(matches!(solve_spd(&a, &[1.0]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn triplet_validation() {
        assert!(RealSymmetricSparse::from_upper_triplets(2, [(1, 0, 1.0)]).is_err());
        assert!(RealSymmetricSparse::from_upper_triplets(2, [(0, 1, 1.0), (0, 1, 2.0)]).is_err());
        assert!(RealSymmetricSparse::from_upper_triplets(2, [(0, 2, 1.0)]).is_err());
        let a = RealSymmetricSparse::from_upper_triplets(2, [(0, 1, 3.0), (1, 1, 2.0)]).unwrap();
        assert_eq!(a.get(1, 0), 3.0);
        assert_eq!(a.to_dense(), vec![0.0, 3.0, 3.0, 2.0]);
    }

    #[test]
    fn builder_symmetrises() {
        let mut b = SymmetricBuilder::new(2);
        b.add(1, 0, 1.5);
        b.add(0, 1, 0.5);
        b.add(0, 0, 1.0);
        let a = b.build();
        assert_eq!(a.upper_entries(), &[(0, 0, 1.0), (0, 1, 2.0)]);
    }

    fn random_spd(dim: usize, seed: u64) -> RealSymmetricSparse {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        // M^T M + dim * I with sparse M
        let mut m = vec![0.0; dim * dim];
        for v in m.iter_mut() {
            if rng.random::<f64>() < 0.1 {
                *v = rng.random_range(-1.0..1.0);
            }
        }
        let mut builder = SymmetricBuilder::new(dim);
        for i in 0..dim {
            for j in i..dim {
                let v: f64 = (0..dim).map(|k| m[k * dim + i] * m[k * dim + j]).sum();
                let v = if i == j { v + 0.5 } else { v };
                if v != 0.0 {
                    builder.add(i, j, v);
                }
            }
        }
        builder.build()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn residual_bound_on_random_spd(dim in 1usize..200, seed in any::<u64>()) {
            let a = random_spd(dim, seed);
            let b: Vec<f64> = (0..dim).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0 + 0.25).collect();
            let x = solve_spd(&a, &b).unwrap();
            let ax = a.mul_vec(&x);
            let res = ax.iter().zip(&b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
            let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(res <= 1e-10 * bn);
        }
    }
}
