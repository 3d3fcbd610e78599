use nalgebra::DMatrix;

use super::dense::{ComplexMatrix, ComplexVector};
use super::{C64, HERMITIAN_TOL};
use crate::{Error, Result};

/// Largest dimension accepted by [`eigensystem`].
pub const MAX_EIGEN_DIM: usize = 8;

/// Eigenvalues and the matching eigenvectors stored as matrix columns.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Vec<C64>,
    pub vectors: ComplexMatrix,
    /// True when the input was Hermitian: real ascending values, orthonormal vectors.
    pub hermitian: bool,
}

impl Eigensystem {
    pub fn vector(&self, k: usize) -> ComplexVector {
        self.vectors.column(k)
    }
}

/// Eigen-decomposition of a small square matrix.
///
/// Hermitian inputs go through nalgebra's symmetric eigensolver and come back
/// sorted ascending with orthonormal vectors. Non-Hermitian input is only
/// supported at dimension 2, where the characteristic polynomial is solved in
/// closed form; a defective 2x2 matrix is reported as non-convergence.
pub fn eigensystem(m: &ComplexMatrix) -> Result<Eigensystem> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    if n > MAX_EIGEN_DIM {
        return Err(Error::SizeLimit(format!("eigensystem limited to dimension {MAX_EIGEN_DIM}, got {n}")));
    }
    if m.is_hermitian(HERMITIAN_TOL) {
        return Ok(hermitian(m));
    }
    if n == 2 {
        return closed_form_2x2(m);
    }
    Err(Error::Unsupported(format!("non-Hermitian eigensystem of dimension {n}")))
}

fn hermitian(m: &ComplexMatrix) -> Eigensystem {
    let n = m.rows();
    let dm = DMatrix::from_fn(n, n, |i, j| {
        // symmetrise so the solver sees an exactly Hermitian matrix
        (m[(i, j)] + m[(j, i)].conj()) * 0.5
    });
    let eig = dm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| C64::new(eig.eigenvalues[k], 0.0)).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Eigensystem {
        values,
        vectors,
        hermitian: true,
    }
}

fn closed_form_2x2(m: &ComplexMatrix) -> Result<Eigensystem> {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let half_tr = (a + d) * 0.5;
    let disc = (half_tr * half_tr - (a * d - b * c)).sqrt();
    let mut values = [half_tr - disc, half_tr + disc];
    values.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));

    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let off_diagonal = b.norm().max(c.norm());
    if disc.norm() <= 1e-12 * scale && off_diagonal > 1e-12 * scale {
        return Err(Error::NoConvergence("defective 2x2 matrix has a single eigenvector".into()));
    }

    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let cols: Vec<[C64; 2]> = if off_diagonal <= 1e-14 * scale {
        // diagonal input: values are a permutation of (a, d)
        let a_first = (values[0] - a).norm() <= (values[0] - d).norm();
        if a_first {
            vec![[one, zero], [zero, one]]
        } else {
            vec![[zero, one], [one, zero]]
        }
    } else {
        values
            .iter()
            .map(|&lambda| {
                let v = if b.norm() >= c.norm() { [b, lambda - a] } else { [lambda - d, c] };
                let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
                [v[0] / norm, v[1] / norm]
            })
            .collect()
    };
    let vectors = ComplexMatrix::from_fn(2, 2, |i, j| cols[j][i]);
    Ok(Eigensystem {
        values: values.to_vec(),
        vectors,
        hermitian: false,
    })
}
