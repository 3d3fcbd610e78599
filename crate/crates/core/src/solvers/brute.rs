use rayon::prelude::*;

use super::{Adjacency, GroundStates};
use crate::qubo::{Bitstring, QuboInstance};
use crate::{Error, Result};

/// Largest instance [`brute_force`] will enumerate.
pub const BRUTE_FORCE_MAX_BITS: usize = 30;

const TIE_TOL: f64 = 1e-9;
const DEGENERACY_TOL: f64 = 1e-12;

/// Exhaustive minimum over all `2^n` bitstrings.
pub fn brute_force(instance: &QuboInstance) -> Result<GroundStates> {
    brute_force_with_cap(instance, BRUTE_FORCE_MAX_BITS)
}

pub fn brute_force_with_cap(instance: &QuboInstance, max_bits: usize) -> Result<GroundStates> {
    let n = instance.n_bits();
    let cap = max_bits.min(BRUTE_FORCE_MAX_BITS);
    if n > cap {
        return Err(Error::SizeLimit(format!(
            "brute force is capped at {cap} bits, instance has {n}"
        )));
    }
    if n == 0 {
        return Ok(GroundStates {
            energy: instance.offset,
            states: vec![Bitstring::zeros(0)],
        });
    }
    let adj = Adjacency::new(instance);
    let top = n.saturating_sub(14).min(10);
    let low = n - top;

    let chunks: Vec<(f64, Vec<u64>)> = (0u64..1 << top)
        .into_par_iter()
        .map(|prefix| scan_chunk(instance, &adj, prefix << low, low))
        .collect();

    let best = chunks.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let mut candidates: Vec<(f64, Bitstring)> = chunks
        .into_iter()
        .filter(|c| c.0 <= best + TIE_TOL)
        .flat_map(|c| c.1)
        .map(|mask| {
            let bits = Bitstring::from_index(mask, n);
            (instance.energy(bits.as_slice()), bits)
        })
        .collect();
    let exact = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    candidates.retain(|c| c.0 <= exact + DEGENERACY_TOL);
    candidates.sort_by(|a, b| a.1.cmp(&b.1));
    Ok(GroundStates {
        energy: exact,
        states: candidates.into_iter().map(|c| c.1).collect(),
    })
}

/// Gray-code walk over the low `low` bits with the rest fixed by `start`.
fn scan_chunk(instance: &QuboInstance, adj: &Adjacency, start: u64, low: usize) -> (f64, Vec<u64>) {
    let n = instance.n_bits();
    let mut bits: Vec<u8> = (0..n).map(|i| ((start >> i) & 1) as u8).collect();
    let mut fields = adj.local_fields(instance, &bits);
    let mut energy = instance.energy(&bits);
    let mut mask = start;
    let mut best = energy;
    let mut ties = vec![mask];
    for k in 1u64..1 << low {
        let i = k.trailing_zeros() as usize;
        let delta = if bits[i] == 0 { fields[i] } else { -fields[i] };
        energy += delta;
        bits[i] ^= 1;
        mask ^= 1 << i;
        let sign = if bits[i] == 1 { 1.0 } else { -1.0 };
        for (j, v) in adj.row(i) {
            fields[j] += sign * v;
        }
        if energy < best - TIE_TOL {
            best = energy;
            ties.clear();
            ties.push(mask);
        } else if energy <= best + TIE_TOL {
            best = best.min(energy);
            ties.push(mask);
        }
    }
    (best, ties)
}

#[cfg(test)]
mod tests {
    use super::*;
    
    use proptest::prelude::*;

    fn naive(instance: &QuboInstance) -> f64 {
        let n = instance.n_bits();
        (0u64..1 << n)
            .map(|k| instance.energy(Bitstring::from_index(k, n).as_slice()))
            .fold(f64::INFINITY, f64::min)
    }

    fn random_instance(n: usize, vals: &[f64]) -> QuboInstance {
        let linear: Vec<f64> = vals[..n].to_vec();
        let mut couplings = Vec::new();
        let mut k = n;
        for i in 0..n {
            for j in i + 1..n {
                couplings.push((i, j, vals[k % vals.len()]));
                k += 1;
            }
        }
        QuboInstance::generic(linear, couplings, 0.25).unwrap()
    }

    #[test]
    fn degenerate_minima_are_all_returned() {
        // E = (q0 - q1)^2 has minima 00 and 11.
        let inst = QuboInstance::generic(vec![1.0, 1.0], vec![(0, 1, -2.0)], 0.0).unwrap();
        let g = brute_force(&inst).unwrap();
        assert_eq!(g.energy, 0.0);
        let s: Vec<String> = g.states.iter().map(|b| b.to_string()).collect();
        assert_eq!(s, vec!["00", "11"]);
    }

    #[test]
    fn cap_is_enforced() {
        let inst = QuboInstance::generic(vec![0.0; 31], vec![], 0.0).unwrap();
        assert!(matches!(brute_force(&inst), Err(Error::SizeLimit(_))));
        let small = QuboInstance::generic(vec![0.0; 5], vec![], 0.0).unwrap();
        assert!(brute_force_with_cap(&small, 4).is_err());
    }

    #[test]
    fn chunked_scan_matches_naive_on_larger_instance() {
        let vals: Vec<f64> = (0..400).map(|k| ((k * 37 % 101) as f64 - 50.0) / 17.0).collect();
        let inst = random_instance(17, &vals);
        let g = brute_force(&inst).unwrap();
        assert!((g.energy - naive(&inst)).abs() < 1e-9);
        for s in &g.states {
            assert!((inst.energy(s.as_slice()) - g.energy).abs() <= 1e-12);
        }
    }

    proptest! {
        #[test]
        fn matches_naive_enumeration(n in 1usize..9, vals in proptest::collection::vec(-3.0f64..3.0, 40)) {
            let inst = random_instance(n, &vals);
            let g = brute_force(&inst).unwrap();
            prop_assert!((g.energy - naive(&inst)).abs() < 1e-9);
            prop_assert!(!g.states.is_empty());
        }
    }
}
