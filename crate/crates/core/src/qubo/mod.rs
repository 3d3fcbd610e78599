//! Fixed-point binarisation of the clock objective.
//!
//! Every real component is written as
//! `x = 2^D (sum_{a<R} 2^{-a} q_a - 1)` with bits `q_a`, bit `a` of component
//! `i` sitting at index `i * R + a`. Expanding `1/2 x^T A x - x^T phi` in the
//! bits and folding `q^2 = q` gives linear terms, strictly upper-triangular
//! couplings and a constant offset; the expansion is exact, so the QUBO energy
//! of any bitstring equals the objective at the decoded point.

mod crosscheck;
mod io;
mod ising;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clock::{ClockSystem, ComponentLayout, HistoryState};
use crate::numerics::RealSymmetricSparse;
use crate::{Error, Result};

pub use crosscheck::{
    cross_check_printed, printed_coupling, printed_linear, printed_offset, Agreement, CrossCheckReport, Discrepancy,
    DiscrepancyKind,
};
pub use io::{read_instance, read_instance_from, write_instance, write_instance_to, FILE_MAGIC};
pub use ising::{spins_from_bits, to_ising, IsingInstance};

/// Default bit budget for a single instance.
pub const DEFAULT_MAX_BITS: usize = 1 << 20;

/// Fixed-point code with `R` bits per component and range exponent `D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedPointCode {
    bits: u32,
    range_exp: i32,
}

impl Default for FixedPointCode {
    fn default() -> Self {
        Self { bits: 2, range_exp: 0 }
    }
}

impl FixedPointCode {
    pub fn new(bits: u32, range_exp: i32) -> Result<Self> {
        if !(1..=30).contains(&bits) {
            return Err(Error::InvalidParameter(format!("bits per component must be in 1..=30, got {bits}")));
        }
        if range_exp.abs() > 60 {
            return Err(Error::InvalidParameter(format!("range exponent {range_exp} out of range")));
        }
        Ok(Self { bits, range_exp })
    }

    /// `R`.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// `D`.
    pub fn range_exp(&self) -> i32 {
        self.range_exp
    }

    /// `2^D`, also the magnitude of the all-zero code.
    pub fn scale(&self) -> f64 {
        2f64.powi(self.range_exp)
    }

    /// Place value `2^{D - alpha}` of bit `alpha`.
    pub fn weight(&self, alpha: u32) -> f64 {
        2f64.powi(self.range_exp - alpha as i32)
    }

    /// Grid spacing `2^{D - R + 1}`.
    pub fn step(&self) -> f64 {
        2f64.powi(self.range_exp - self.bits as i32 + 1)
    }

    pub fn min_value(&self) -> f64 {
        -self.scale()
    }

    pub fn max_value(&self) -> f64 {
        self.scale() * (1.0 - 2f64.powi(1 - self.bits as i32))
    }

    /// Value of one component's bits, most significant first.
    pub fn value(&self, bits: &[u8]) -> f64 {
        debug_assert_eq!(bits.len(), self.bits as usize);
        bits.iter()
            .enumerate()
            .map(|(a, &q)| if q != 0 { self.weight(a as u32) } else { 0.0 })
            .sum::<f64>()
            - self.scale()
    }

    /// All representable values, ascending.
    pub fn grid(&self) -> Vec<f64> {
        (0..1u64 << self.bits).map(|k| self.min_value() + k as f64 * self.step()).collect()
    }

    /// Bits of the grid point nearest to `x`, clamped to the range.
    pub fn nearest_bits(&self, x: f64) -> Vec<u8> {
        let levels = (1u64 << self.bits) - 1;
        let k = ((x - self.min_value()) / self.step()).round().clamp(0.0, levels as f64) as u64;
        (0..self.bits).map(|a| ((k >> (self.bits - 1 - a)) & 1) as u8).collect()
    }
}

/// Bit index `i * R + alpha` for component `i`, bit position `alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VariableLayout {
    pub components: usize,
    pub bits_per_component: usize,
}

impl VariableLayout {
    pub fn n_bits(&self) -> usize {
        self.components * self.bits_per_component
    }

    pub fn bit(&self, component: usize, alpha: usize) -> usize {
        debug_assert!(component < self.components && alpha < self.bits_per_component);
        component * self.bits_per_component + alpha
    }

    pub fn locate(&self, bit: usize) -> (usize, usize) {
        (bit / self.bits_per_component, bit % self.bits_per_component)
    }
}

/// A string of 0/1 values in bit-index order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring(Vec<u8>);

impl Bitstring {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParameter("bit values must be 0 or 1".into()));
        }
        Ok(Self(bits))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Bits of `index`, bit 0 of the string taking the least significant bit.
    pub fn from_index(index: u64, n: usize) -> Self {
        Self((0..n).map(|k| ((index >> k) & 1) as u8).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

impl From<Vec<u8>> for Bitstring {
    /// Nonzero entries become 1.
    fn from(v: Vec<u8>) -> Self {
        Self(v.into_iter().map(|b| (b != 0) as u8).collect())
    }
}

impl AsRef<[u8]> for Bitstring {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 0 { "0" } else { "1" })?;
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidParameter(format!("invalid bit character '{other}'"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Self)
    }
}

/// Descriptive data carried with an instance and written to its file header.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceMeta {
    pub system: String,
    pub components: usize,
    pub layout: Option<ComponentLayout>,
    pub code: FixedPointCode,
    /// Free-form `meta <key> <value>` lines (grid, initial state, parameters).
    pub extra: BTreeMap<String, String>,
}

/// Binary quadratic form `sum a_i q_i + sum_{i<j} b_ij q_i q_j + f0`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuboInstance {
    pub linear: Vec<f64>,
    /// `(i, j, b_ij)` with `i < j`, sorted, no duplicates.
    pub couplings: Vec<(usize, usize, f64)>,
    pub offset: f64,
    pub meta: InstanceMeta,
}

impl QuboInstance {
    /// Validates couplings (strictly upper-triangular, in range, unique) and sorts them.
    pub fn new(
        linear: Vec<f64>,
        mut couplings: Vec<(usize, usize, f64)>,
        offset: f64,
        meta: InstanceMeta,
    ) -> Result<Self> {
        let n = linear.len();
        let expected = meta.components * meta.code.bits() as usize;
        if n != expected {
            return Err(Error::DimensionMismatch(format!(
                "{n} linear terms for {} components of {} bits",
                meta.components,
                meta.code.bits()
            )));
        }
        if let Some(layout) = meta.layout {
            if layout.len() != meta.components {
                return Err(Error::DimensionMismatch("component layout does not match component count".into()));
            }
        }
        couplings.sort_by_key(|c| (c.0, c.1));
        for w in couplings.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::InvalidParameter(format!("duplicate coupling ({}, {})", w[0].0, w[0].1)));
            }
        }
        if let Some(&(i, j, _)) = couplings.iter().find(|&&(i, j, _)| i >= j || j >= n) {
            return Err(Error::InvalidParameter(format!("coupling ({i}, {j}) is not strictly upper-triangular in range")));
        }
        Ok(Self {
            linear,
            couplings,
            offset,
            meta,
        })
    }

    /// Plain QUBO with one bit per component and no clock layout.
    pub fn generic(linear: Vec<f64>, couplings: Vec<(usize, usize, f64)>, offset: f64) -> Result<Self> {
        let meta = InstanceMeta {
            system: "custom".into(),
            components: linear.len(),
            layout: None,
            code: FixedPointCode::new(1, 0)?,
            extra: BTreeMap::new(),
        };
        Self::new(linear, couplings, offset, meta)
    }

    pub fn n_bits(&self) -> usize {
        self.linear.len()
    }

    pub fn code(&self) -> FixedPointCode {
        self.meta.code
    }

    pub fn variable_layout(&self) -> VariableLayout {
        VariableLayout {
            components: self.meta.components,
            bits_per_component: self.meta.code.bits() as usize,
        }
    }

    /// Energy of `bits`; panics on a length mismatch. See [`qubo_energy`].
    pub fn energy(&self, bits: &[u8]) -> f64 {
        assert_eq!(bits.len(), self.n_bits(), "bitstring length does not match instance");
        let lin: f64 = self.linear.iter().zip(bits).filter(|(_, &q)| q != 0).map(|(a, _)| a).sum();
        let quad: f64 = self
            .couplings
            .iter()
            .filter(|&&(i, j, _)| bits[i] != 0 && bits[j] != 0)
            .map(|&(_, _, v)| v)
            .sum();
        lin + quad + self.offset
    }

    /// Component values encoded by `bits`.
    pub fn decode_components(&self, bits: &[u8]) -> Result<Vec<f64>> {
        self.check_len(bits)?;
        let r = self.code().bits() as usize;
        Ok(bits.chunks(r).map(|chunk| self.code().value(chunk)).collect())
    }

    /// Nearest-grid bits for a vector of component values.
    pub fn quantize(&self, x: &[f64]) -> Result<Bitstring> {
        if x.len() != self.meta.components {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} components",
                x.len(),
                self.meta.components
            )));
        }
        Ok(Bitstring(x.iter().flat_map(|&v| self.code().nearest_bits(v)).collect()))
    }

    fn check_len(&self, bits: &[u8]) -> Result<()> {
        if bits.len() != self.n_bits() {
            return Err(Error::DimensionMismatch(format!(
                "bitstring has {} bits, instance has {}",
                bits.len(),
                self.n_bits()
            )));
        }
        Ok(())
    }
}

/// Exact energy of `bits` including the offset.
pub fn qubo_energy(instance: &QuboInstance, bits: &[u8]) -> Result<f64> {
    instance.check_len(bits)?;
    Ok(instance.energy(bits))
}

/// Component values and the decoded history for `bits`.
pub fn decode_solution(bits: &[u8], instance: &QuboInstance) -> Result<(Vec<f64>, HistoryState)> {
    let x = instance.decode_components(bits)?;
    let layout = instance
        .meta
        .layout
        .ok_or_else(|| Error::Unsupported("instance has no clock layout to decode into a history".into()))?;
    let history = layout.unembed(&x)?;
    Ok((x, history))
}

/// Coefficients of the binarised quadratic form.
#[derive(Clone, Debug, PartialEq)]
pub struct QuboCoefficients {
    pub linear: Vec<f64>,
    pub couplings: Vec<(usize, usize, f64)>,
    pub offset: f64,
}

/// Expands `1/2 x^T a x - x^T phi` under the fixed-point substitution.
///
/// With `x_i = s_i - m`, `s_i = sum_a w_a q_ia`, `m = 2^D`:
/// couplings are `a_ij w_a w_b` for each unordered bit pair, the linear term
/// of bit `(i, a)` is `1/2 a_ii w_a^2 - m w_a sum_j a_ij - w_a phi_i`, and the
/// offset is `1/2 m^2 sum_ij a_ij + m sum_i phi_i`.
pub fn encode_quadratic(
    a: &RealSymmetricSparse,
    phi: &[f64],
    code: FixedPointCode,
    max_bits: usize,
) -> Result<QuboCoefficients> {
    let n = a.dim();
    if phi.len() != n {
        return Err(Error::DimensionMismatch(format!("linear vector has length {}, matrix is {n}", phi.len())));
    }
    let r = code.bits() as usize;
    let n_bits = n
        .checked_mul(r)
        .filter(|&b| b <= max_bits)
        .ok_or_else(|| Error::SizeLimit(format!("{n} components x {r} bits exceeds the budget of {max_bits} bits")))?;
    let m = code.scale();
    let w: Vec<f64> = (0..code.bits()).map(|a| code.weight(a)).collect();
    let bit = |i: usize, alpha: usize| i * r + alpha;

    let row_sums = a.row_sums();
    let mut linear = vec![0.0; n_bits];
    let mut couplings = Vec::with_capacity(a.nnz_upper() * r * r);
    for &(i, j, v) in a.upper_entries() {
        if i == j {
            for alpha in 0..r {
                linear[bit(i, alpha)] += 0.5 * v * w[alpha] * w[alpha];
                for beta in alpha + 1..r {
                    couplings.push((bit(i, alpha), bit(i, beta), v * w[alpha] * w[beta]));
                }
            }
        } else {
            for alpha in 0..r {
                for beta in 0..r {
                    couplings.push((bit(i, alpha), bit(j, beta), v * w[alpha] * w[beta]));
                }
            }
        }
    }
    for i in 0..n {
        for alpha in 0..r {
            linear[bit(i, alpha)] -= w[alpha] * (m * row_sums[i] + phi[i]);
        }
    }
    couplings.sort_by_key(|c| (c.0, c.1));
    let total: f64 = row_sums.iter().sum();
    let offset = 0.5 * m * m * total + m * phi.iter().sum::<f64>();
    Ok(QuboCoefficients {
        linear,
        couplings,
        offset,
    })
}

/// Binarises a clock system under the default bit budget.
pub fn encode_qubo(sys: &ClockSystem, code: FixedPointCode) -> Result<QuboInstance> {
    encode_qubo_with_budget(sys, code, DEFAULT_MAX_BITS, "custom")
}

pub fn encode_qubo_with_budget(
    sys: &ClockSystem,
    code: FixedPointCode,
    max_bits: usize,
    system: &str,
) -> Result<QuboInstance> {
    let coeffs = encode_quadratic(&sys.a_real, &sys.phi_real, code, max_bits)?;
    let meta = InstanceMeta {
        system: system.to_string(),
        components: sys.dim(),
        layout: Some(sys.layout),
        code,
        extra: BTreeMap::new(),
    };
    QuboInstance::new(coeffs.linear, coeffs.couplings, coeffs.offset, meta)
}

/// Binarises a bare quadratic form with no clock layout attached.
pub fn encode_raw(a: &RealSymmetricSparse, phi: &[f64], code: FixedPointCode) -> Result<QuboInstance> {
    let coeffs = encode_quadratic(a, phi, code, DEFAULT_MAX_BITS)?;
    let meta = InstanceMeta {
        system: "custom".into(),
        components: a.dim(),
        layout: None,
        code,
        extra: BTreeMap::new(),
    };
    QuboInstance::new(coeffs.linear, coeffs.couplings, coeffs.offset, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::{build_clock_operator, build_system, quadratic_form};
    use crate::models::{build_hamiltonian, build_propagators, SystemId, SystemSpec, TimeGrid};
    use crate::numerics::ComplexVector;
    use proptest::prelude::*;

    fn toy() -> QuboInstance {
        let a = RealSymmetricSparse::identity(1);
        encode_raw(&a, &[1.0], FixedPointCode::new(2, 0).unwrap()).unwrap()
    }

    fn clock_system(id: SystemId, n: usize) -> ClockSystem {
        let h = build_hamiltonian(&SystemSpec::new(id)).unwrap().matrix;
        let grid = TimeGrid::with_step(0.0, 1.0, n).unwrap();
        let props = build_propagators(&h, &grid).unwrap();
        build_system(&build_clock_operator(&props), &ComplexVector::basis(id.dim(), 0).unwrap()).unwrap()
    }

    #[test]
    fn code_grid_and_bounds() {
        let code = FixedPointCode::new(2, 0).unwrap();
        assert_eq!(code.grid(), vec![-1.0, -0.5, 0.0, 0.5]);
        assert_eq!(code.max_value(), 0.5);
        let code = FixedPointCode::new(3, 1).unwrap();
        assert_eq!(code.min_value(), -2.0);
        assert_eq!(code.max_value(), 2.0 * (1.0 - 0.25));
        assert_eq!(code.grid().len(), 8);
        assert!(FixedPointCode::new(0, 0).is_err());
    }

    #[test]
    fn nearest_bits_round_trip_on_grid() {
        let code = FixedPointCode::new(4, 1).unwrap();
        for v in code.grid() {
            let bits = code.nearest_bits(v);
            assert_eq!(code.value(&bits), v);
        }
        assert_eq!(code.nearest_bits(100.0), vec![1, 1, 1, 1]);
        assert_eq!(code.nearest_bits(-100.0), vec![0, 0, 0, 0]);
    }

    #[test]
    fn toy_instance_enumeration() {
        // 1/2 x^2 - x over {-1, -0.5, 0, 0.5}: minimum at 0.5 with value -0.375
        let inst = toy();
        assert_eq!(inst.n_bits(), 2);
        let mut best = (f64::INFINITY, vec![]);
        for k in 0..4u8 {
            let bits = vec![(k >> 1) & 1, k & 1];
            let x = inst.decode_components(&bits).unwrap()[0];
            let direct = 0.5 * x * x - x;
            let e = qubo_energy(&inst, &bits).unwrap();
            assert!((e - direct).abs() < 1e-15);
            if e < best.0 {
                best = (e, bits);
            }
        }
        assert_eq!(best.1, vec![1, 1]);
        assert!((best.0 + 0.375).abs() < 1e-15);
        assert!((qubo_energy(&inst, &[0, 0]).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn h1_two_slices_has_sixteen_bits() {
        let inst = encode_qubo(&clock_system(SystemId::H1, 2), FixedPointCode::new(2, 0).unwrap()).unwrap();
        assert_eq!(inst.n_bits(), 16);
    }

    #[test]
    fn decode_extremes() {
        let sys = clock_system(SystemId::H2, 2);
        let code = FixedPointCode::new(3, 1).unwrap();
        let inst = encode_qubo(&sys, code).unwrap();
        let (x0, h0) = decode_solution(Bitstring::zeros(inst.n_bits()).as_slice(), &inst).unwrap();
        assert!(x0.iter().all(|&v| v == -2.0));
        assert_eq!(h0.n_points(), 2);
        let (x1, _) = decode_solution(Bitstring::ones(inst.n_bits()).as_slice(), &inst).unwrap();
        assert!(x1.iter().all(|&v| v == 2.0 * (1.0 - 0.25)));
        assert!(decode_solution(&[0, 1], &inst).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let sys = clock_system(SystemId::H1, 2);
        let err = encode_qubo_with_budget(&sys, FixedPointCode::new(2, 0).unwrap(), 8, "H1");
        assert!(matches!(err, Err(Error::SizeLimit(_))));
    }

    #[test]
    fn couplings_are_strictly_upper() {
        let inst = encode_qubo(&clock_system(SystemId::H8, 2), FixedPointCode::new(3, 0).unwrap()).unwrap();
        assert!(inst.couplings.iter().all(|&(i, j, _)| i < j));
        assert!(inst.couplings.windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1)));
    }

    #[test]
    fn bitstring_parsing() {
        let b: Bitstring = "0110".parse().unwrap();
        assert_eq!(b.as_slice(), &[0, 1, 1, 0]);
        assert_eq!(b.to_string(), "0110");
        assert!("012".parse::<Bitstring>().is_err());
        assert_eq!(Bitstring::from_index(0b101, 4).as_slice(), &[1, 0, 1, 0]);
    }

    proptest! {
        #[test]
        fn energy_identity_on_random_bits(seed in any::<u64>(), r in 1u32..4, d in -1i32..2) {
            use rand::{Rng, SeedableRng};
            let sys = clock_system(SystemId::H3, 3);
            let inst = encode_qubo(&sys, FixedPointCode::new(r, d).unwrap()).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let bits: Vec<u8> = (0..inst.n_bits()).map(|_| rng.random_range(0..2u8)).collect();
            let (x, _) = decode_solution(&bits, &inst).unwrap();
            let e = qubo_energy(&inst, &bits).unwrap();
            prop_assert!((e - quadratic_form(&sys, &x).unwrap()).abs() < 1e-9);
        }
    }
}
