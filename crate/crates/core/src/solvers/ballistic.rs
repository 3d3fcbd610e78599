use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{digest, greedy_descent, restart_seed, Adjacency, SampleRecord, SampleSet, SolverMeta};
use crate::qubo::{to_ising, Bitstring, QuboInstance};
use crate::{Error, Result};

/// Ballistic bifurcation dynamics on the Ising form of the instance.
///
/// Positions relax in `[-1, 1]` (inelastic walls) while a pump ramps the
/// on-site potential from a single well to a double well; bits are read
/// from the final signs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallisticConfig {
    pub steps: usize,
    pub step_size: f64,
    pub momentum_decay: f64,
    pub restarts: usize,
    /// Single-flip descent on the rounded state.
    pub polish: bool,
}

impl Default for BallisticConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            step_size: 0.5,
            momentum_decay: 0.0,
            restarts: 100,
            polish: true,
        }
    }
}

impl BallisticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.restarts == 0 {
            return Err(Error::InvalidParameter("steps and restarts must be positive".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidParameter(format!("step size must be positive, got {}", self.step_size)));
        }
        if !(0.0..1.0).contains(&self.momentum_decay) {
            return Err(Error::InvalidParameter(format!(
                "momentum decay must be in [0, 1), got {}",
                self.momentum_decay
            )));
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        digest(&serde_json::to_string(self).unwrap_or_default())
    }
}

struct SpinGraph {
    h: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    coupling_scale: f64,
}

impl SpinGraph {
    fn new(instance: &QuboInstance) -> Self {
        let ising = to_ising(instance);
        let n = ising.h.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in &ising.couplings {
            rows[i].push((j, v));
            rows[j].push((i, v));
        }
        let mut row_ptr = vec![0];
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        for r in rows {
            for (j, v) in r {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        let sq: f64 = ising.h.iter().map(|v| v * v).sum::<f64>() + vals.iter().map(|v| v * v).sum::<f64>();
        let coupling_scale = (sq / n.max(1) as f64).sqrt();
        Self {
            h: ising.h,
            row_ptr,
            cols,
            vals,
            coupling_scale,
        }
    }
}

/// Runs `cfg.restarts` independent trajectories.
pub fn ballistic_solve(instance: &QuboInstance, cfg: &BallisticConfig, seed: u64) -> Result<SampleSet> {
    cfg.validate()?;
    let clock = Instant::now();
    let graph = SpinGraph::new(instance);
    let adj = Adjacency::new(instance);
    let records: Vec<SampleRecord> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(seed, k as u64));
            let mut bits = trajectory(&graph, cfg, &mut rng);
            if cfg.polish {
                greedy_descent(instance, &adj, &mut bits);
            }
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
            solver: "ballistic".into(),
            config_digest: cfg.digest(),
            seed,
            wall_times: vec![clock.elapsed().as_secs_f64()],
        },
    })
}

fn trajectory(g: &SpinGraph, cfg: &BallisticConfig, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let n = g.h.len();
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-0.1..0.1)).collect();
    let mut y: Vec<f64> = (0..n).map(|_| rng.random_range(-0.1..0.1)).collect();
    let xi = if g.coupling_scale > 0.0 { 0.5 / g.coupling_scale } else { 0.0 };
    let dt = cfg.step_size;
    let keep = 1.0 - cfg.momentum_decay;
    for step in 0..cfg.steps {
        let pump = step as f64 / cfg.steps as f64;
        for i in 0..n {
            let mut grad = g.h[i];
            for k in g.row_ptr[i]..g.row_ptr[i + 1] {
                grad += g.vals[k] * x[g.cols[k]];
            }
            y[i] = keep * y[i] - dt * ((1.0 - pump) * x[i] + xi * grad);
        }
        for i in 0..n {
            x[i] += dt * y[i];
            if x[i].abs() > 1.0 {
                x[i] = x[i].signum();
                y[i] = 0.0;
            }
        }
    }
    x.iter().map(|&v| (v > 0.0) as u8).collect()
}
