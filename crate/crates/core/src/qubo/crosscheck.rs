//! Comparison of the expansion-derived coefficients against the closed forms
//!
//! ```text
//! b_ij^ab = A_ij 2^(1 - a - b + 2D)
//! a_i^a   = 2^(1 - a + D) [A_ii - 2^D (sum_j A_ij - phi_i)]
//! f0      = 2^D (2^(D-1) sum_ij A_ij + sum_i phi_i)
//! ```
//!
//! read as a sum over all ordered index pairs. The closed forms are only a
//! diagnostic; the encoder never uses them.

use serde::Serialize;

use super::QuboInstance;
use crate::numerics::RealSymmetricSparse;
use crate::{Error, Result};

const REL_TOL: f64 = 1e-9;
const MAX_LISTED: usize = 32;

pub fn printed_coupling(a_ij: f64, alpha: u32, beta: u32, range_exp: i32) -> f64 {
    a_ij * 2f64.powi(1 - alpha as i32 - beta as i32 + 2 * range_exp)
}

pub fn printed_linear(a_ii: f64, row_sum: f64, phi_i: f64, alpha: u32, range_exp: i32) -> f64 {
    2f64.powi(1 - alpha as i32 + range_exp) * (a_ii - 2f64.powi(range_exp) * (row_sum - phi_i))
}

pub fn printed_offset(total: f64, phi_sum: f64, range_exp: i32) -> f64 {
    2f64.powi(range_exp) * (2f64.powi(range_exp - 1) * total + phi_sum)
}

/// How one coefficient family compares with its closed form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Agreement {
    Exact,
    /// Every printed value equals the expansion times this factor.
    UniformFactor(f64),
    Mismatch { count: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DiscrepancyKind {
    Offset,
    Coupling,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Discrepancy {
    pub kind: DiscrepancyKind,
    pub bit_i: Option<usize>,
    pub bit_j: Option<usize>,
    pub expanded: f64,
    pub printed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCheckReport {
    pub offset: Agreement,
    pub couplings: Agreement,
    pub linear: Agreement,
    pub total_discrepancies: usize,
    /// The first few offending coefficients.
    pub discrepancies: Vec<Discrepancy>,
}

impl CrossCheckReport {
    /// The offset matches and the couplings agree up to one global factor.
    pub fn structurally_consistent(&self) -> bool {
        self.offset == Agreement::Exact && !matches!(self.couplings, Agreement::Mismatch { .. })
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs()).max(1.0)
}

fn classify(pairs: &[(f64, f64)]) -> Agreement {
    let bad = pairs.iter().filter(|&&(e, p)| !close(e, p)).count();
    if bad == 0 {
        return Agreement::Exact;
    }
    let ratio = pairs.iter().find(|&&(e, _)| e != 0.0).map(|&(e, p)| p / e);
    if let Some(r) = ratio {
        if pairs.iter().all(|&(e, p)| close(e * r, p)) {
            return Agreement::UniformFactor(r);
        }
    }
    Agreement::Mismatch { count: bad }
}

/// Cross-checks `instance`, which must have been encoded from `(a, phi)`.
pub fn cross_check_printed(a: &RealSymmetricSparse, phi: &[f64], instance: &QuboInstance) -> Result<CrossCheckReport> {
    if a.dim() != instance.meta.components || phi.len() != a.dim() {
        return Err(Error::DimensionMismatch("quadratic form does not match the instance".into()));
    }
    let d = instance.code().range_exp();
    let layout = instance.variable_layout();
    let row_sums = a.row_sums();
    let mut discrepancies = Vec::new();
    let mut total = 0;
    let mut note = |kind, bit_i, bit_j, expanded: f64, printed: f64| {
        if !close(expanded, printed) {
            total += 1;
            if discrepancies.len() < MAX_LISTED {
                discrepancies.push(Discrepancy {
                    kind,
                    bit_i,
                    bit_j,
                    expanded,
                    printed,
                });
            }
        }
    };

    let offset_printed = printed_offset(row_sums.iter().sum(), phi.iter().sum(), d);
    note(DiscrepancyKind::Offset, None, None, instance.offset, offset_printed);
    let offset = classify(&[(instance.offset, offset_printed)]);

    // Each unordered bit pair appears twice in the ordered sum.
    let coupling_pairs: Vec<(f64, f64)> = instance
        .couplings
        .iter()
        .map(|&(p, q, v)| {
            let (i, alpha) = layout.locate(p);
            let (j, beta) = layout.locate(q);
            let printed = 2.0 * printed_coupling(a.get(i, j), alpha as u32, beta as u32, d);
            note(DiscrepancyKind::Coupling, Some(p), Some(q), v, printed);
            (v, printed)
        })
        .collect();

    // Diagonal ordered terms fold into the linear coefficient through q^2 = q.
    let linear_pairs: Vec<(f64, f64)> = instance
        .linear
        .iter()
        .enumerate()
        .map(|(p, &v)| {
            let (i, alpha) = layout.locate(p);
            let a_ii = a.get(i, i);
            let printed =
                printed_linear(a_ii, row_sums[i], phi[i], alpha as u32, d) + printed_coupling(a_ii, alpha as u32, alpha as u32, d);
            note(DiscrepancyKind::Linear, Some(p), None, v, printed);
            (v, printed)
        })
        .collect();

    Ok(CrossCheckReport {
        offset,
        couplings: classify(&coupling_pairs),
        linear: classify(&linear_pairs),
        total_discrepancies: total,
        discrepancies,
    })
}
