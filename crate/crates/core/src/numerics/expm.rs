use super::dense::ComplexMatrix;
use crate::{Error, Result};

const MAX_TERMS: usize = 64;

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// The squaring count `s` is the smallest with `||m||_1 / 2^s <= 0.5`. The
/// series for the scaled matrix is summed until the next term is below
/// `tol * 2^-s` relative to the partial sum (floored at machine precision),
/// so the error left after `s` squarings stays within `tol`.
pub fn matrix_exponential(m: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let n = m.rows();
    let norm = m.one_norm();
    let mut squarings = 0u32;
    while norm / 2f64.powi(squarings as i32) > 0.5 {
        squarings += 1;
    }
    let scaled = m.scale_real(2f64.powi(-(squarings as i32)));
    let threshold = (tol * 2f64.powi(-(squarings as i32))).max(f64::EPSILON * 0.5);

    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=MAX_TERMS {
        term = (&term * &scaled).scale_real(1.0 / k as f64);
        sum = &sum + &term;
        if term.frobenius_norm() <= threshold * sum.frobenius_norm() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}
