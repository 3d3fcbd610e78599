use nalgebra::DMatrix;

use super::GroundStates;
use crate::numerics::RealSymmetricSparse;
use crate::qubo::{Bitstring, QuboInstance};
use crate::{Error, Result};

/// Default cap on visited search nodes.
pub const LATTICE_MAX_NODES: u64 = 200_000_000;

const DEGENERACY_TOL: f64 = 1e-12;

/// Exact minimum of `1/2 x^T A x - x^T phi` over the fixed-point grid of
/// `instance`, for positive definite `A`.
///
/// Depth-first enumeration over the Cholesky factor, visiting values in order
/// of distance from the conditional optimum and pruning by the best complete
/// assignment so far. Fails with [`Error::NoConvergence`] when more than
/// `max_nodes` nodes would be needed.
pub fn lattice_ground_state(
    a: &RealSymmetricSparse,
    phi: &[f64],
    instance: &QuboInstance,
    max_nodes: u64,
) -> Result<GroundStates> {
    let n = a.dim();
    if phi.len() != n || instance.meta.components != n {
        return Err(Error::DimensionMismatch(format!(
            "matrix of dimension {n}, {} linear terms, instance with {} components",
            phi.len(),
            instance.meta.components
        )));
    }
    let code = instance.code();
    let dense = DMatrix::from_row_slice(n, n, &a.to_dense());
    let chol = dense
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("quadratic form is not positive definite".into()))?;
    let l = chol.l();
    let xstar = chol.solve(&nalgebra::DVector::from_column_slice(phi));

    let start: Vec<f64> = xstar.iter().map(|&v| code.value(&code.nearest_bits(v))).collect();
    let diff: Vec<f64> = start.iter().zip(xstar.iter()).map(|(s, x)| s - x).collect();
    let bound = a.quadratic(&diff);

    let mut search = Search {
        diag: (0..n).map(|i| l[(i, i)]).collect(),
        below: (0..n).map(|i| (i + 1..n).map(|j| l[(j, i)]).collect()).collect(),
        xstar: xstar.iter().copied().collect(),
        min: code.min_value(),
        step: code.step(),
        levels: 1usize << code.bits(),
        d: vec![0.0; n],
        value: vec![0.0; n],
        bound,
        slack: 1e-9 * bound.abs().max(1.0),
        leaves: Vec::new(),
        nodes: 0,
        max_nodes,
    };
    search.visit(n, 0.0)?;

    let cutoff = search.bound + search.slack;
    let mut found: Vec<(f64, Bitstring)> = search
        .leaves
        .into_iter()
        .filter(|(q, _)| *q <= cutoff)
        .map(|(_, x)| {
            let bits = Bitstring::from(x.iter().flat_map(|&v| code.nearest_bits(v)).collect::<Vec<u8>>());
            (instance.energy(bits.as_slice()), bits)
        })
        .collect();
    if found.is_empty() {
        // The starting point is itself optimal but was pruned by the strict bound.
        let bits = Bitstring::from(start.iter().flat_map(|&v| code.nearest_bits(v)).collect::<Vec<u8>>());
        found.push((instance.energy(bits.as_slice()), bits));
    }
    let best = found.iter().map(|f| f.0).fold(f64::INFINITY, f64::min);
    found.retain(|f| f.0 <= best + DEGENERACY_TOL);
    found.sort_by(|x, y| x.1.cmp(&y.1));
    found.dedup_by(|x, y| x.1 == y.1);
    Ok(GroundStates {
        energy: best,
        states: found.into_iter().map(|f| f.1).collect(),
    })
}

struct Search {
    diag: Vec<f64>,
    below: Vec<Vec<f64>>,
    xstar: Vec<f64>,
    min: f64,
    step: f64,
    levels: usize,
    d: Vec<f64>,
    value: Vec<f64>,
    bound: f64,
    slack: f64,
    leaves: Vec<(f64, Vec<f64>)>,
    nodes: u64,
    max_nodes: u64,
}

impl Search {
    /// Assigns variable `depth - 1` given all higher-indexed ones.
    fn visit(&mut self, depth: usize, partial: f64) -> Result<()> {
        let i = depth - 1;
        let shift: f64 = self.below[i].iter().zip(&self.d[i + 1..]).map(|(l, d)| l * d).sum();
        let z = self.xstar[i] - shift / self.diag[i];
        let lii2 = self.diag[i] * self.diag[i];
        let top = self.levels as i64 - 1;
        let k0 = ((z - self.min) / self.step).round().clamp(0.0, top as f64) as i64;
        let (mut lo, mut hi) = (k0 - 1, k0 + 1);
        let mut next = Some(k0);
        while let Some(k) = next {
            self.nodes += 1;
            if self.nodes > self.max_nodes {
                return Err(Error::NoConvergence(format!(
                    "exact search exceeded {} nodes",
                    self.max_nodes
                )));
            }
            let g = self.min + k as f64 * self.step;
            let total = partial + lii2 * (g - z) * (g - z);
            if total > self.bound + self.slack {
                break;
            }
            self.d[i] = g - self.xstar[i];
            self.value[i] = g;
            if i == 0 {
                self.bound = self.bound.min(total);
                self.leaves.push((total, self.value.clone()));
            } else {
                self.visit(i, total)?;
            }
            let dist = |k: i64| (self.min + k as f64 * self.step - z).abs();
            next = match (lo >= 0, hi <= top) {
                (true, true) if dist(lo) <= dist(hi) => {
                    lo -= 1;
                    Some(lo + 1)
                }
                (_, true) => {
                    hi += 1;
                    Some(hi - 1)
                }
                (true, false) => {
                    lo -= 1;
                    Some(lo + 1)
                }
                (false, false) => None,
            };
        }
        self.d[i] = 0.0;
        Ok(())
    }
}
