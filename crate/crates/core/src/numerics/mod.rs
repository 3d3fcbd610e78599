//! Small dense complex linear algebra and a sparse symmetric solver.
//!
//! States live in dimension at most 8, propagators are dense and tiny, and the
//! only large object is the real embedding of the clock system, which is kept
//! sparse.

mod dense;
mod eigen;
mod expm;
mod sparse;

pub use dense::{kron, pauli, ComplexMatrix, ComplexVector, MAX_DENSE_DIM};
pub use eigen::{eigensystem, Eigensystem};
pub use expm::matrix_exponential;
pub use sparse::{solve_spd, RealSymmetricSparse, SymmetricBuilder};

pub use num_complex::Complex64 as C64;

/// Tolerance under which a matrix is treated as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
