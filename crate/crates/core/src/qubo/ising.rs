use serde::Serialize;

use super::QuboInstance;

/// Spin form `sum h_i s_i + sum_{i<j} J_ij s_i s_j + offset`, `s = 2q - 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsingInstance {
    pub h: Vec<f64>,
    pub couplings: Vec<(usize, usize, f64)>,
    pub offset: f64,
}

impl IsingInstance {
    pub fn n_spins(&self) -> usize {
        self.h.len()
    }

    /// Energy of spins given as `±1`.
    pub fn energy(&self, spins: &[i8]) -> f64 {
        assert_eq!(spins.len(), self.h.len());
        let field: f64 = self.h.iter().zip(spins).map(|(h, &s)| h * s as f64).sum();
        let coupling: f64 = self
            .couplings
            .iter()
            .map(|&(i, j, v)| v * (spins[i] * spins[j]) as f64)
            .sum();
        field + coupling + self.offset
    }
}

/// Substitutes `q = (1 + s) / 2`.
pub fn to_ising(instance: &QuboInstance) -> IsingInstance {
    let mut h: Vec<f64> = instance.linear.iter().map(|a| 0.5 * a).collect();
    let mut offset = instance.offset + 0.5 * instance.linear.iter().sum::<f64>();
    let mut couplings = Vec::with_capacity(instance.couplings.len());
    for &(i, j, b) in &instance.couplings {
        let quarter = 0.25 * b;
        couplings.push((i, j, quarter));
        h[i] += quarter;
        h[j] += quarter;
        offset += quarter;
    }
    IsingInstance { h, couplings, offset }
}

/// `s = 2q - 1`.
pub fn spins_from_bits(bits: &[u8]) -> Vec<i8> {
    bits.iter().map(|&q| if q != 0 { 1 } else { -1 }).collect()
}
