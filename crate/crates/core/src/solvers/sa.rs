use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{digest, restart_seed, Adjacency, SampleRecord, SampleSet, SolverMeta};
use crate::qubo::{Bitstring, QuboInstance};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    #[default]
    Geometric,
    Linear,
}

/// Simulated annealing parameters. Missing JSON fields take the defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaConfig {
    pub sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub restarts: usize,
    pub schedule: Schedule,
    /// Report the lowest-energy state visited rather than the final one.
    pub keep_best: bool,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self {
            sweeps: 1000,
            beta_start: 1.0,
            beta_end: 50.0,
            restarts: 100,
            schedule: Schedule::Geometric,
            keep_best: true,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 || self.restarts == 0 {
            return Err(Error::InvalidParameter("sweeps and restarts must be positive".into()));
        }
        if !(self.beta_start > 0.0 && self.beta_end >= self.beta_start && self.beta_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < beta_start <= beta_end, got {} and {}",
                self.beta_start, self.beta_end
            )));
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        digest(&serde_json::to_string(self).unwrap_or_default())
    }
}

/// Inverse temperature of each sweep.
pub fn beta_schedule(cfg: &SaConfig) -> Vec<f64> {
    let n = cfg.sweeps;
    (0..n)
        .map(|s| {
            let t = if n == 1 { 1.0 } else { s as f64 / (n - 1) as f64 };
            match cfg.schedule {
                Schedule::Geometric => cfg.beta_start * (cfg.beta_end / cfg.beta_start).powf(t),
                Schedule::Linear => cfg.beta_start + (cfg.beta_end - cfg.beta_start) * t,
            }
        })
        .collect()
}

/// Single-bit-flip Metropolis annealing, one sample per restart.
pub fn simulated_annealing(instance: &QuboInstance, cfg: &SaConfig, seed: u64) -> Result<SampleSet> {
    cfg.validate()?;
    let clock = Instant::now();
    let adj = Adjacency::new(instance);
    let betas = beta_schedule(cfg);
    let records: Vec<SampleRecord> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(seed, k as u64));
            let bits = anneal(instance, &adj, &betas, cfg.keep_best, &mut rng);
            SampleRecord {
                energy: instance.energy(&bits),
                bits: Bitstring::from(bits),
                count: 1,
            }
        })
        .collect();
    Ok(SampleSet {
        records,
        meta: SolverMeta {
            solver: "sa".into(),
            config_digest: cfg.digest(),
            seed,
            wall_times: vec![clock.elapsed().as_secs_f64()],
        },
    })
}

fn anneal(instance: &QuboInstance, adj: &Adjacency, betas: &[f64], keep_best: bool, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let n = instance.n_bits();
    let mut bits: Vec<u8> = (0..n).map(|_| rng.random::<bool>() as u8).collect();
    let mut fields = adj.local_fields(instance, &bits);
    let mut energy = 0.0;
    let mut best_energy = 0.0;
    let mut best = bits.clone();
    for &beta in betas {
        for i in 0..n {
            let delta = if bits[i] == 0 { fields[i] } else { -fields[i] };
            if delta > 0.0 && rng.random::<f64>() >= (-beta * delta).exp() {
                continue;
            }
            bits[i] ^= 1;
            energy += delta;
            let sign = if bits[i] == 1 { 1.0 } else { -1.0 };
            for (j, v) in adj.row(i) {
                fields[j] += sign * v;
            }
            if keep_best && energy < best_energy - 1e-12 {
                best_energy = energy;
                best.copy_from_slice(&bits);
            }
        }
    }
    if keep_best {
        best
    } else {
        bits
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::brute_force;

    fn frustrated() -> QuboInstance {
        let n = 10;
        let linear: Vec<f64> = (0..n).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3).collect();
        let mut couplings = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                couplings.push((i, j, (((i * 3 + j * 5) % 7) as f64 - 3.0) * 0.25));
            }
        }
        QuboInstance::generic(linear, couplings, 1.5).unwrap()
    }

    #[test]
    fn schedule_endpoints() {
        let cfg = SaConfig::default();
        let b = beta_schedule(&cfg);
        assert_eq!(b.len(), 1000);
        assert!((b[0] - 1.0).abs() < 1e-15 && (b[999] - 50.0).abs() < 1e-12);
        assert!(b.windows(2).all(|w| w[1] > w[0]));
        let lin = beta_schedule(&SaConfig {
            schedule: Schedule::Linear,
            sweeps: 3,
            ..cfg
        });
        assert!((lin[1] - 25.5).abs() < 1e-12);
    }

    #[test]
    fn config_json_defaults_and_validation() {
        let cfg: SaConfig = serde_json::from_str(r#"{"sweeps": 50, "schedule": "linear"}"#).unwrap();
        assert_eq!(cfg.sweeps, 50);
        assert_eq!(cfg.restarts, 100);
        assert_eq!(cfg.schedule, Schedule::Linear);
        assert!(serde_json::from_str::<SaConfig>(r#"{"sweep": 5}"#).is_err());
        let bad = SaConfig {
            beta_end: 0.01,
            ..SaConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn finds_ground_state_and_reports_exact_energies() {
        let inst = frustrated();
        let ground = brute_force(&inst).unwrap().energy;
        let cfg = SaConfig {
            restarts: 20,
            sweeps: 300,
            ..SaConfig::default()
        };
        let s = simulated_annealing(&inst, &cfg, 11).unwrap();
        assert_eq!(s.total_count(), 20);
        assert!(s.max_energy_error(&inst).unwrap() < 1e-12);
        assert!(s.records.iter().all(|r| r.energy >= ground - 1e-9));
        assert!((s.best().unwrap().energy - ground).abs() < 1e-9);
    }

    #[test]
    fn zero_temperature_limit_ends_in_local_minimum() {
        let inst = frustrated();
        let cfg = SaConfig {
            beta_start: 1e12,
            beta_end: 1e12,
            sweeps: 30,
            restarts: 10,
            keep_best: false,
            ..SaConfig::default()
        };
        let adj = Adjacency::new(&inst);
        for r in simulated_annealing(&inst, &cfg, 2).unwrap().records {
            let bits = r.bits.as_slice();
            let fields = adj.local_fields(&inst, bits);
            for (i, f) in fields.iter().enumerate() {
                let delta = if bits[i] == 0 { *f } else { -*f };
                assert!(delta >= -1e-12, "improving flip left at bit {i}");
            }
        }
    }

    #[test]
    fn single_bit_instance_is_solved() {
        let inst = QuboInstance::generic(vec![-0.5], vec![], 0.0).unwrap();
        let s = simulated_annealing(&inst, &SaConfig::default(), 0).unwrap();
        assert!(s.records.iter().all(|r| r.bits.as_slice() == [1]));
    }

    #[test]
    fn same_seed_same_samples_regardless_of_threads() {
        let inst = frustrated();
        let cfg = SaConfig {
            restarts: 16,
            sweeps: 2,
            beta_start: 0.1,
            beta_end: 0.5,
            ..SaConfig::default()
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = one.install(|| simulated_annealing(&inst, &cfg, 5).unwrap());
        let b = simulated_annealing(&inst, &cfg, 5).unwrap();
        assert_eq!(a.records, b.records);
        let c = simulated_annealing(&inst, &cfg, 6).unwrap();
        assert_ne!(a.records, c.records);
    }
}
