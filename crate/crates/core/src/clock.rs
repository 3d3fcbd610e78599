//! Clock operator, the initial-condition system and its real embedding.
//!
//! For a propagator chain `U_0..U_{N-2}` the clock operator is the Hermitian
//! block-tridiagonal matrix with diagonal blocks `w_n I` (`w_n = 1` on the two
//! temporal boundaries, `2` inside) and off-diagonal blocks `-U_n` below,
//! `-U_n^dagger` above. Adding the projector on the first slice gives a
//! matrix `A` with `A Psi = |t_0> (x) psi_0` for the history state `Psi`, so
//! `Psi` minimises `f(x) = 1/2 <x|A|x> - Re <x|phi>`.
//!
//! Real components are laid out part-major: index `part * L * N + n * L + l`
//! with part 0 the real and part 1 the imaginary component.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::models::PropagatorSequence;
use crate::numerics::{solve_spd, ComplexMatrix, ComplexVector, RealSymmetricSparse, SymmetricBuilder, C64};
use crate::{Error, Result};

/// Real or imaginary half of a complex component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Real = 0,
    Imag = 1,
}

/// Bijection between real component indices and `(slice, component, part)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComponentLayout {
    pub l: usize,
    pub n_points: usize,
}

impl ComponentLayout {
    pub const NAME: &'static str = "part-major";

    pub fn new(l: usize, n_points: usize) -> Self {
        Self { l, n_points }
    }

    /// Number of real components, `2 L N`.
    pub fn len(&self) -> usize {
        2 * self.l * self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, part: Part, slice: usize, component: usize) -> usize {
        debug_assert!(slice < self.n_points && component < self.l);
        part as usize * self.l * self.n_points + slice * self.l + component
    }

    pub fn locate(&self, index: usize) -> (usize, usize, Part) {
        let half = self.l * self.n_points;
        let part = if index < half { Part::Real } else { Part::Imag };
        let rest = index % half;
        (rest / self.l, rest % self.l, part)
    }

    pub fn embed(&self, history: &HistoryState) -> Vec<f64> {
        let mut x = vec![0.0; self.len()];
        for (n, slice) in history.slices().iter().enumerate() {
            for (l, z) in slice.entries().iter().enumerate() {
                x[self.index(Part::Real, n, l)] = z.re;
                x[self.index(Part::Imag, n, l)] = z.im;
            }
        }
        x
    }

    pub fn unembed(&self, x: &[f64]) -> Result<HistoryState> {
        if x.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "real vector has length {}, layout expects {}",
                x.len(),
                self.len()
            )));
        }
        let slices = (0..self.n_points)
            .map(|n| {
                ComplexVector::from(
                    (0..self.l)
                        .map(|l| C64::new(x[self.index(Part::Real, n, l)], x[self.index(Part::Imag, n, l)]))
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        Ok(HistoryState { slices })
    }
}

/// Time-ordered slices `psi(t_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryState {
    slices: Vec<ComplexVector>,
}

impl HistoryState {
    pub fn new(slices: Vec<ComplexVector>) -> Result<Self> {
        let Some(first) = slices.first() else {
            return Err(Error::InvalidParameter("history needs at least one slice".into()));
        };
        let l = first.dim();
        if slices.iter().any(|s| s.dim() != l) {
            return Err(Error::DimensionMismatch("history slices differ in dimension".into()));
        }
        Ok(Self { slices })
    }

    pub fn slices(&self) -> &[ComplexVector] {
        &self.slices
    }

    pub fn slice(&self, n: usize) -> &ComplexVector {
        &self.slices[n]
    }

    pub fn n_points(&self) -> usize {
        self.slices.len()
    }

    pub fn dim(&self) -> usize {
        self.slices[0].dim()
    }

    /// Concatenation in slice order, index `n * L + l`.
    pub fn flatten(&self) -> Vec<C64> {
        self.slices.iter().flat_map(|s| s.entries().iter().copied()).collect()
    }
}

/// Block-tridiagonal clock operator.
#[derive(Clone, Debug)]
pub struct ClockOperator {
    dim: usize,
    weights: Vec<f64>,
    steps: Vec<ComplexMatrix>,
}

/// Diagonal weights `1, 2, ..., 2, 1`; a single slice has weight 0.
pub fn boundary_weights(n_points: usize) -> Vec<f64> {
    match n_points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|k| if k == 0 || k == n - 1 { 1.0 } else { 2.0 }).collect(),
    }
}

/// Weights from summing `|t_{n+1}><t_{n+1}| (x) I` together with its
/// conjugate over every link: `0` on the first slice and `2` elsewhere.
/// Kept to document that this reading does not annihilate history states.
pub fn literal_weights(n_points: usize) -> Vec<f64> {
    (0..n_points).map(|k| if k == 0 { 0.0 } else { 2.0 }).collect()
}

pub fn build_clock_operator(props: &PropagatorSequence) -> ClockOperator {
    ClockOperator {
        dim: props.dim(),
        weights: boundary_weights(props.n_points()),
        steps: props.steps().to_vec(),
    }
}

impl ClockOperator {
    /// Clock operator with custom diagonal weights.
    pub fn with_weights(props: &PropagatorSequence, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != props.n_points() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} slices",
                weights.len(),
                props.n_points()
            )));
        }
        Ok(Self {
            dim: props.dim(),
            weights,
            steps: props.steps().to_vec(),
        })
    }

    pub fn state_dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total dimension `L N`.
    pub fn dim(&self) -> usize {
        self.dim * self.n_points()
    }

    /// Nonzero-pattern entries `(row, col, value)` of the full operator.
    fn for_each_entry(&self, mut f: impl FnMut(usize, usize, C64)) {
        let l = self.dim;
        for (n, &w) in self.weights.iter().enumerate() {
            if w != 0.0 {
                for k in 0..l {
                    f(n * l + k, n * l + k, C64::new(w, 0.0));
                }
            }
        }
        for (n, u) in self.steps.iter().enumerate() {
            for r in 0..l {
                for c in 0..l {
                    let z = u[(r, c)];
                    if z != C64::new(0.0, 0.0) {
                        f((n + 1) * l + r, n * l + c, -z);
                        f(n * l + c, (n + 1) * l + r, -z.conj());
                    }
                }
            }
        }
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let d = self.dim();
        let mut m = ComplexMatrix::zeros(d, d);
        self.for_each_entry(|r, c, z| m[(r, c)] += z);
        m
    }

    /// `C x` for a flattened history vector.
    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector has length {}, clock operator is {}",
                x.len(),
                self.dim()
            )));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.for_each_entry(|r, c, z| out[r] += z * x[c]);
        Ok(out)
    }

    /// `||C Psi||_2`.
    pub fn residual(&self, history: &HistoryState) -> Result<f64> {
        let y = self.apply(&history.flatten())?;
        Ok(y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
    }
}

/// The real quadratic objective `f(x) = 1/2 x^T A x - x^T phi` of a clock system.
#[derive(Clone, Debug)]
pub struct ClockSystem {
    pub a_real: RealSymmetricSparse,
    pub phi_real: Vec<f64>,
    pub layout: ComponentLayout,
    pub psi0: ComplexVector,
}

/// Assembles `A = C + |t_0><t_0| (x) I`, embeds it as
/// `[[Re A, -Im A], [Im A, Re A]]` in part-major order and embeds `|t_0> (x) psi0`.
pub fn build_system(clock: &ClockOperator, psi0: &ComplexVector) -> Result<ClockSystem> {
    let l = clock.state_dim();
    if psi0.dim() != l {
        return Err(Error::DimensionMismatch(format!(
            "initial state has dimension {}, clock acts on {l}",
            psi0.dim()
        )));
    }
    let norm = psi0.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("initial state must have unit norm, got {norm}")));
    }
    let layout = ComponentLayout::new(l, clock.n_points());
    let half = l * clock.n_points();
    let mut builder = SymmetricBuilder::new(layout.len());
    let mut push = |r: usize, c: usize, z: C64| {
        // Only the upper triangle of the real embedding is stored.
        let blocks = [(r, c, z.re), (r, half + c, -z.im), (half + r, c, z.im), (half + r, half + c, z.re)];
        for (i, j, v) in blocks {
            if i <= j && v != 0.0 {
                builder.add(i, j, v);
            }
        }
    };
    clock.for_each_entry(&mut push);
    for k in 0..l {
        push(k, k, C64::new(1.0, 0.0));
    }
    let a_real = builder.build();

    let mut phi_real = vec![0.0; layout.len()];
    for (k, z) in psi0.entries().iter().enumerate() {
        phi_real[layout.index(Part::Real, 0, k)] = z.re;
        phi_real[layout.index(Part::Imag, 0, k)] = z.im;
    }
    Ok(ClockSystem {
        a_real,
        phi_real,
        layout,
        psi0: psi0.clone(),
    })
}

impl ClockSystem {
    pub fn dim(&self) -> usize {
        self.layout.len()
    }

    pub fn state_dim(&self) -> usize {
        self.layout.l
    }

    pub fn n_points(&self) -> usize {
        self.layout.n_points
    }

    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        quadratic_form(self, x)
    }

    /// Smallest eigenvalue of the embedded matrix by dense decomposition.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.dim();
        let dense = DMatrix::from_row_slice(n, n, &self.a_real.to_dense());
        SymmetricEigen::new(dense).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_positive_definite(&self) -> bool {
        let n = self.dim();
        DMatrix::from_row_slice(n, n, &self.a_real.to_dense()).cholesky().is_some()
    }
}

/// `1/2 x^T A x - x^T phi`.
pub fn quadratic_form(sys: &ClockSystem, x: &[f64]) -> Result<f64> {
    if x.len() != sys.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector has length {}, system has {} components",
            x.len(),
            sys.dim()
        )));
    }
    let linear: f64 = x.iter().zip(&sys.phi_real).map(|(a, b)| a * b).sum();
    Ok(0.5 * sys.a_real.quadratic(x) - linear)
}

/// Unconstrained minimiser `x* = A^{-1} phi` and the history it encodes.
pub fn continuous_minimizer(sys: &ClockSystem) -> Result<(Vec<f64>, HistoryState)> {
    let x = solve_spd(&sys.a_real, &sys.phi_real)?;
    let history = sys.layout.unembed(&x)?;
    Ok((x, history))
}
