//! Invariant suites shared by the `verify` subcommand and the tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::clock::{build_clock_operator, quadratic_form, HistoryState};
use crate::models::build_propagators;
use crate::problem::Problem;
use crate::qubo::{cross_check_printed, decode_solution, qubo_energy, Bitstring, DEFAULT_MAX_BITS};
use crate::Result;

/// Instances up to this size are checked on every bitstring.
pub const EXHAUSTIVE_BITS: usize = 16;
pub const ENERGY_TOL: f64 = 1e-9;
pub const KERNEL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `qubo_energy(q) == f(decode(q))`: exhaustive up to [`EXHAUSTIVE_BITS`],
/// otherwise on `random_samples` seeded bitstrings.
pub fn energy_identity(problem: &Problem, random_samples: usize, seed: u64) -> Result<Check> {
    let (sys, inst) = problem.encode(DEFAULT_MAX_BITS)?;
    let n = inst.n_bits();
    let mut worst: f64 = 0.0;
    let mut check = |bits: &[u8]| -> Result<()> {
        let (x, _) = decode_solution(bits, &inst)?;
        worst = worst.max((qubo_energy(&inst, bits)? - quadratic_form(&sys, &x)?).abs());
        Ok(())
    };
    let mode = if n <= EXHAUSTIVE_BITS {
        for k in 0u64..1 << n {
            check(Bitstring::from_index(k, n).as_slice())?;
        }
        format!("all {} bitstrings", 1u64 << n)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..random_samples {
            let bits: Vec<u8> = (0..n).map(|_| rng.random::<bool>() as u8).collect();
            check(&bits)?;
        }
        format!("{random_samples} random bitstrings")
    };
    Ok(Check {
        name: format!("energy identity {} N={}", problem.spec.id, problem.grid.n_points()),
        passed: worst <= ENERGY_TOL,
        detail: format!("{n} bits, {mode}, max deviation {worst:e}"),
    })
}

/// The exact history lies in the clock kernel and solves `A x = phi`.
/// Only meaningful for unitary propagators; other systems are reported as skipped.
pub fn clock_kernel(problem: &Problem) -> Result<Check> {
    let name = format!("clock kernel {} N={}", problem.spec.id, problem.grid.n_points());
    let h = problem.hamiltonian()?;
    if !h.hermitian {
        return Ok(Check {
            name,
            passed: true,
            detail: "skipped: non-unitary propagators".into(),
        });
    }
    let props = build_propagators(&h.matrix, &problem.grid)?;
    let clock = build_clock_operator(&props);
    let history = HistoryState::new(problem.oracle()?)?;
    let kernel = clock.residual(&history)?;
    let sys = problem.clock_system()?;
    let x = sys.layout.embed(&history);
    let ax = sys.a_real.mul_vec(&x);
    let linear = ax
        .iter()
        .zip(&sys.phi_real)
        .map(|(a, p)| (a - p).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(Check {
        name,
        passed: kernel <= KERNEL_TOL && linear <= KERNEL_TOL,
        detail: format!("|C psi| = {kernel:e}, |A x - phi| = {linear:e}"),
    })
}

/// Compares the encoder against the closed-form coefficients. Passes when the
/// offset matches and couplings differ by at most one global factor; the
/// remaining differences are listed in the detail.
pub fn printed_coefficients(problem: &Problem) -> Result<Check> {
    let (sys, inst) = problem.encode(DEFAULT_MAX_BITS)?;
    let report = cross_check_printed(&sys.a_real, &sys.phi_real, &inst)?;
    Ok(Check {
        name: format!("closed-form coefficients {} N={}", problem.spec.id, problem.grid.n_points()),
        passed: report.structurally_consistent(),
        detail: format!(
            "offset {:?}, couplings {:?}, linear {:?}",
            report.offset, report.couplings, report.linear
        ),
    })
}

/// Runs the three suites over `problems`.
pub fn run_all(problems: &[Problem], random_samples: usize, seed: u64) -> Result<Vec<SuiteReport>> {
    let mut energy = Vec::new();
    let mut kernel = Vec::new();
    let mut printed = Vec::new();
    for p in problems {
        energy.push(energy_identity(p, random_samples, seed)?);
        kernel.push(clock_kernel(p)?);
        printed.push(printed_coefficients(p)?);
    }
    Ok(vec![
        SuiteReport {
            suite: "energy-identity".into(),
            checks: energy,
        },
        SuiteReport {
            suite: "clock-kernel".into(),
            checks: kernel,
        },
        SuiteReport {
            suite: "closed-form-coefficients".into(),
            checks: printed,
        },
    ])
}
