//! Benchmark generators, time grids, short-time propagators and the exact
//! evolution oracle.
//!
//! Every catalog generator enters the first-order equation `d psi/dt = G psi`
//! as `G = -i H`, so a slice of width `dt` is propagated by `exp(-i H dt)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::numerics::{eigensystem, kron, matrix_exponential, pauli, ComplexMatrix, ComplexVector, C64, HERMITIAN_TOL};
use crate::{Error, Result};

/// Tolerance handed to the matrix exponential when building propagators.
pub const PROPAGATOR_TOL: f64 = 1e-15;

/// Default phase angle of the PT-symmetric qubit.
pub const DEFAULT_PT_ALPHA: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SystemId {
    H1,
    H2,
    H3,
    H4,
    H5,
    H6,
    H7,
    H8,
}

impl SystemId {
    pub const ALL: [SystemId; 8] = [
        SystemId::H1,
        SystemId::H2,
        SystemId::H3,
        SystemId::H4,
        SystemId::H5,
        SystemId::H6,
        SystemId::H7,
        SystemId::H8,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SystemId::H1 => "H1",
            SystemId::H2 => "H2",
            SystemId::H3 => "H3",
            SystemId::H4 => "H4",
            SystemId::H5 => "H5",
            SystemId::H6 => "H6",
            SystemId::H7 => "H7",
            SystemId::H8 => "H8",
        }
    }

    /// Hilbert-space dimension `L`.
    pub fn dim(self) -> usize {
        match self {
            SystemId::H1 | SystemId::H2 | SystemId::H3 | SystemId::H7 => 2,
            SystemId::H4 | SystemId::H5 | SystemId::H8 => 4,
            SystemId::H6 => 8,
        }
    }

    pub fn qubits(self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn is_hermitian(self) -> bool {
        self != SystemId::H7
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SystemId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown system '{s}' (expected H1..H8)")))
    }
}

/// A catalog entry plus the parameters of the PT-symmetric qubit.
///
/// `omega`, `alpha` and `b` are read only for `H7`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub id: SystemId,
    pub omega: f64,
    pub alpha: f64,
    pub b: f64,
}

impl SystemSpec {
    pub fn new(id: SystemId) -> Self {
        Self {
            id,
            omega: 1.0,
            alpha: DEFAULT_PT_ALPHA,
            b: unit_spectrum_coupling(DEFAULT_PT_ALPHA),
        }
    }

    /// `H7` with `b = sqrt(1 + sin^2 alpha)`, which puts the spectrum at `±omega`.
    pub fn pt_symmetric(omega: f64, alpha: f64) -> Result<Self> {
        let spec = Self {
            id: SystemId::H7,
            omega,
            alpha,
            b: unit_spectrum_coupling(alpha),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id == SystemId::H7 {
            if !(self.alpha.abs() < PI / 2.0) {
                return Err(Error::InvalidParameter(format!(
                    "H7 needs |alpha| < pi/2 for unbroken PT symmetry, got {}",
                    self.alpha
                )));
            }
            if !self.omega.is_finite() || !self.b.is_finite() {
                return Err(Error::InvalidParameter("H7 parameters must be finite".into()));
            }
        }
        Ok(())
    }
}

pub fn unit_spectrum_coupling(alpha: f64) -> f64 {
    (1.0 + alpha.sin().powi(2)).sqrt()
}

/// A generator matrix together with its Hermiticity.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    pub matrix: ComplexMatrix,
    pub hermitian: bool,
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

fn kron_all(factors: &[ComplexMatrix]) -> ComplexMatrix {
    factors[1..]
        .iter()
        .fold(factors[0].clone(), |acc, f| kron(&acc, f).expect("catalog tensor products stay small"))
}

/// The catalog generator for `spec`.
pub fn build_hamiltonian(spec: &SystemSpec) -> Result<Hamiltonian> {
    spec.validate()?;
    let (x, y, z, id) = (pauli::x(), pauli::y(), pauli::z(), pauli::id());
    let matrix = match spec.id {
        SystemId::H1 => y.scale_real(PI / 2.0),
        SystemId::H2 => (&x + &z).scale_real(PI * FRAC_1_SQRT_2),
        SystemId::H3 => (&id.scale_real(0.75) - &y.scale_real(0.25)).scale_real(PI),
        SystemId::H4 => (&kron_all(&[x.clone(), x]) + &kron_all(&[y.clone(), y])).scale_real(PI / 4.0),
        SystemId::H5 => (&kron_all(&[x.clone(), x]) - &kron_all(&[y.clone(), y])).scale_real(PI / 4.0),
        SystemId::H6 => {
            let xxx = kron_all(&[x.clone(), x.clone(), x.clone()]);
            let xyy = kron_all(&[x.clone(), y.clone(), y.clone()]);
            let yxy = kron_all(&[y.clone(), x.clone(), y.clone()]);
            let yyx = kron_all(&[y.clone(), y, x]);
            (&(&(&xxx - &xyy) - &yxy) - &yyx).scale_real(PI / 8.0)
        }
        SystemId::H7 => {
            // omega (b sigma_x + i sin(alpha) sigma_z): PT-symmetric under
            // P = sigma_x and complex conjugation, eigenvalues ±omega sqrt(b^2 - sin^2 alpha)
            let gain_loss = z.scale(C64::new(0.0, spec.alpha.sin()));
            (&x.scale_real(spec.b) + &gain_loss).scale_real(spec.omega)
        }
        SystemId::H8 => {
            let terms = &(&kron_all(&[id.clone(), y.clone()]) - &kron_all(&[id, z])) + &kron_all(&[x.clone(), x.clone()]);
            (&terms - &kron_all(&[y, x])).scale_real(PI / 4.0)
        }
    };
    let hermitian = matrix.is_hermitian(HERMITIAN_TOL);
    Ok(Hamiltonian { matrix, hermitian })
}

/// Uniform time grid `t_n = t0 + n dt`, `n = 0..n_points`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    dt: f64,
    n_points: usize,
}

impl TimeGrid {
    /// Grid spanning `[t0, tf]` with `n_points` points.
    pub fn new(t0: f64, tf: f64, n_points: usize) -> Result<Self> {
        if n_points == 0 {
            return Err(Error::InvalidParameter("a time grid needs at least one point".into()));
        }
        if n_points == 1 {
            return Ok(Self { t0, dt: 0.0, n_points });
        }
        if !(tf > t0) {
            return Err(Error::InvalidParameter(format!("need tf > t0, got [{t0}, {tf}]")));
        }
        Ok(Self {
            t0,
            dt: (tf - t0) / (n_points - 1) as f64,
            n_points,
        })
    }

    pub fn with_step(t0: f64, dt: f64, n_points: usize) -> Result<Self> {
        if n_points == 0 {
            return Err(Error::InvalidParameter("a time grid needs at least one point".into()));
        }
        if n_points >= 2 && !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        Ok(Self { t0, dt, n_points })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.time(self.n_points - 1)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|n| self.time(n))
    }
}

/// Short-time propagators `U_n` for `n = 0..N-1`.
#[derive(Clone, Debug)]
pub struct PropagatorSequence {
    steps: Vec<ComplexMatrix>,
    dim: usize,
}

impl PropagatorSequence {
    /// Checks that every step is square of size `dim` and invertible.
    pub fn new(dim: usize, steps: Vec<ComplexMatrix>) -> Result<Self> {
        for (n, u) in steps.iter().enumerate() {
            if u.rows() != dim || u.cols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "propagator {n} is {}x{}, expected {dim}x{dim}",
                    u.rows(),
                    u.cols()
                )));
            }
            if u.determinant()?.norm() <= 1e-12 {
                return Err(Error::Singular(format!("propagator {n} is not invertible")));
            }
        }
        Ok(Self { steps, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[ComplexMatrix] {
        &self.steps
    }

    pub fn n_points(&self) -> usize {
        self.steps.len() + 1
    }
}

/// `exp(-i h dt)`.
pub fn short_time_propagator(h: &ComplexMatrix, dt: f64) -> Result<ComplexMatrix> {
    matrix_exponential(&h.scale(C64::new(0.0, -dt)), PROPAGATOR_TOL)
}

/// Propagators for a time-independent generator: `U_n = exp(-i h dt)`.
///
/// A single-point grid yields an empty sequence.
pub fn build_propagators(h: &ComplexMatrix, grid: &TimeGrid) -> Result<PropagatorSequence> {
    if !h.is_square() {
        return Err(Error::NotSquare {
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    let steps = grid.n_points() - 1;
    if steps == 0 {
        return PropagatorSequence::new(h.rows(), Vec::new());
    }
    let u = short_time_propagator(h, grid.dt())?;
    PropagatorSequence::new(h.rows(), vec![u; steps])
}

/// Propagators for a time-dependent first-order generator `G(t)`:
/// `U_n = exp(G(t_n) dt)`.
pub fn build_propagators_with<F>(dim: usize, grid: &TimeGrid, generator: F) -> Result<PropagatorSequence>
where
    F: Fn(f64) -> ComplexMatrix,
{
    let steps = (0..grid.n_points() - 1)
        .map(|n| {
            let g = generator(grid.time(n));
            if g.rows() != dim || g.cols() != dim {
                return Err(Error::DimensionMismatch(format!("generator at t = {} has wrong shape", grid.time(n))));
            }
            matrix_exponential(&g.scale_real(grid.dt()), PROPAGATOR_TOL)
        })
        .collect::<Result<Vec<_>>>()?;
    PropagatorSequence::new(dim, steps)
}

fn check_unit_norm(psi: &ComplexVector) -> Result<()> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("initial state must have unit norm, got {norm}")));
    }
    Ok(())
}

/// Applies a propagator chain to `psi0`, returning every slice including `psi0`.
pub fn propagate(props: &PropagatorSequence, psi0: &ComplexVector) -> Result<Vec<ComplexVector>> {
    if psi0.dim() != props.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has dimension {}, propagators act on {}",
            psi0.dim(),
            props.dim()
        )));
    }
    let mut states = Vec::with_capacity(props.n_points());
    states.push(psi0.clone());
    for u in props.steps() {
        let next = u.mul_vec(states.last().unwrap());
        states.push(next);
    }
    Ok(states)
}

/// Exact slice-by-slice evolution `psi_{n+1} = U_n psi_n` on the grid.
pub fn exact_evolution(h: &ComplexMatrix, grid: &TimeGrid, psi0: &ComplexVector) -> Result<Vec<ComplexVector>> {
    check_unit_norm(psi0)?;
    let props = build_propagators(h, grid)?;
    propagate(&props, psi0)
}

/// Initial-state selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialState {
    /// Computational basis vector `e_i`.
    Basis(usize),
    /// `k`-th eigenvector in ascending eigenvalue order.
    Eigenstate(usize),
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Basis(0)
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::Basis(i) => write!(f, "basis:{i}"),
            InitialState::Eigenstate(k) => write!(f, "eigen:{k}"),
        }
    }
}

impl FromStr for InitialState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, idx) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("initial state '{s}' should look like basis:0 or eigen:1")))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad index in initial state '{s}'")))?;
        match kind.trim() {
            "basis" => Ok(InitialState::Basis(idx)),
            "eigen" | "eigenstate" => Ok(InitialState::Eigenstate(idx)),
            other => Err(Error::InvalidParameter(format!("unknown initial-state kind '{other}'"))),
        }
    }
}

/// Builds the initial state for a catalog system.
///
/// Eigenstates are normalised with the phase fixed so the largest-magnitude
/// component (first one on ties) is real and positive.
pub fn initial_state(spec: &SystemSpec, choice: InitialState) -> Result<ComplexVector> {
    let dim = spec.id.dim();
    match choice {
        InitialState::Basis(i) => ComplexVector::basis(dim, i),
        InitialState::Eigenstate(k) => {
            if k >= dim {
                return Err(Error::InvalidParameter(format!("eigenstate {k} out of range for dimension {dim}")));
            }
            let h = build_hamiltonian(spec)?;
            if !h.hermitian {
                return Err(Error::Unsupported(format!(
                    "eigenstate initial states need a Hermitian generator; {} is not",
                    spec.id
                )));
            }
            let es = eigensystem(&h.matrix)?;
            fix_phase(&es.vector(k).normalized()?)
        }
    }
}

fn fix_phase(v: &ComplexVector) -> Result<ComplexVector> {
    let mut best = 0;
    for (i, z) in v.entries().iter().enumerate() {
        if z.norm() > v[best].norm() + 1e-12 {
            best = i;
        }
    }
    let pivot = v[best];
    if pivot.norm() == 0.0 {
        return Err(Error::DegenerateSample("zero eigenvector".into()));
    }
    Ok(v.scale(pivot.conj() / pivot.norm()))
}
