//! Command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bench::{run_bench, write_report_csv, write_report_json, SolverKind, SweepConfig, DEFAULT_TARGET};
use crate::models::{InitialState, SystemId, SystemSpec, TimeGrid};
use crate::observables::{observable_series, oracle_series, write_series_to, Selector};
use crate::problem::Problem;
use crate::qubo::{read_instance, write_instance_to, FixedPointCode, QuboInstance, DEFAULT_MAX_BITS};
use crate::solvers::{
    ballistic_solve, brute_force, read_samples, restart_seed, simulated_annealing, write_samples_to, BallisticConfig,
    SaConfig, SampleRecord, SampleSet, SolverMeta,
};
use crate::verify;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "paraqube", version, about = "Encode quantum dynamics as QUBO and solve it classically")]
pub struct Cli {
    /// Worker threads for the solvers.
    #[arg(long, global = true, env = "PARAQUBE_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the QUBO instance of one system and grid.
    Generate(GenerateArgs),
    /// Sample an instance file with a solver.
    Solve(SolveArgs),
    /// Turn a sample file into a <sigma_z> / fidelity series.
    Decode(DecodeArgs),
    /// Success probability and TTS over a range of time points.
    Bench(BenchArgs),
    /// Exact-evolution observable series.
    Oracle(OracleArgs),
    /// Run the energy-identity, clock-kernel and coefficient suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    #[arg(long, default_value = "H1")]
    pub system: SystemId,
    /// Initial state, `basis:<i>` or `eigen:<k>`.
    #[arg(long, default_value = "basis:0")]
    pub psi0: InitialState,
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    /// Final time; the grid spans [t0, tf].
    #[arg(long, default_value_t = 1.0)]
    pub tf: f64,
    /// Fixed step instead of a span.
    #[arg(long)]
    pub dt: Option<f64>,
    /// H7 frequency.
    #[arg(long)]
    pub omega: Option<f64>,
    /// H7 gain/loss angle.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// H7 coupling; defaults to the unit-spectrum value for alpha.
    #[arg(long)]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CodeArgs {
    #[arg(long, default_value_t = 2)]
    pub bits: u32,
    #[arg(long = "range-exp", default_value_t = 0, allow_hyphen_values = true)]
    pub range_exp: i32,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub code: CodeArgs,
    #[arg(long, default_value_t = 2)]
    pub timepoints: usize,
    #[arg(long = "max-bits", default_value_t = DEFAULT_MAX_BITS)]
    pub max_bits: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "sa")]
    pub solver: SolverKind,
    /// Restarts per run.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Solver configuration as JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Omit timestamps and timings from the output.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Instance file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Sample file.
    #[arg(long)]
    pub samples: PathBuf,
    /// `best` or `level:<k>`.
    #[arg(long, default_value = "best")]
    pub selector: Selector,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated systems.
    #[arg(long, default_value = "H1", value_delimiter = ',')]
    pub system: Vec<SystemId>,
    #[arg(long, default_value = "basis:0")]
    pub psi0: InitialState,
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tf: f64,
    /// Time points as `a..b` (inclusive), a single value, or a comma list.
    #[arg(long, default_value = "2..6")]
    pub timepoints: String,
    #[command(flatten)]
    pub code: CodeArgs,
    #[arg(long, default_value = "sa", value_delimiter = ',')]
    pub solver: Vec<SolverKind>,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TARGET)]
    pub target: f64,
    /// Report path; a CSV mirror is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Zero all timing fields in the report.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, default_value_t = 2)]
    pub timepoints: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Systems to check; all when omitted.
    #[arg(long, value_delimiter = ',')]
    pub system: Vec<SystemId>,
    #[arg(long, default_value_t = 2)]
    pub timepoints: usize,
    #[command(flatten)]
    pub code: CodeArgs,
    /// Random bitstrings per instance above the exhaustive size.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `a..b`, `n` or `a,b,c`.
pub fn parse_timepoints(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidParameter(format!("time points '{s}' should look like 2..6, 4 or 2,3,5"));
    let out: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|v| v.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if out.is_empty() || out.contains(&0) {
        return Err(bad());
    }
    Ok(out)
}

fn spec_from(args: &SystemArgs) -> Result<SystemSpec> {
    let mut spec = SystemSpec::new(args.system);
    if let Some(omega) = args.omega {
        spec.omega = omega;
    }
    if let Some(alpha) = args.alpha {
        spec = SystemSpec {
            alpha,
            b: crate::models::unit_spectrum_coupling(alpha),
            ..spec
        };
    }
    if let Some(b) = args.b {
        spec.b = b;
    }
    spec.validate()?;
    Ok(spec)
}

fn problem_from(args: &SystemArgs, n_points: usize, code: FixedPointCode) -> Result<Problem> {
    let grid = match args.dt {
        Some(dt) => TimeGrid::with_step(args.t0, dt, n_points)?,
        None => TimeGrid::new(args.t0, args.tf, n_points)?,
    };
    Ok(Problem {
        spec: spec_from(args)?,
        grid,
        psi0: args.psi0,
        code,
    })
}

fn code_from(args: &CodeArgs) -> Result<FixedPointCode> {
    FixedPointCode::new(args.bits, args.range_exp)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn read_config<T: serde::de::DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        Some(p) => Ok(serde_json::from_reader(io::BufReader::new(File::open(p)?))?),
        None => Ok(T::default()),
    }
}

fn solve_once(instance: &QuboInstance, args: &SolveArgs, seed: u64) -> Result<SampleSet> {
    match args.solver {
        SolverKind::Sa => {
            let cfg = SaConfig {
                restarts: args.samples,
                ..read_config(&args.config)?
            };
            simulated_annealing(instance, &cfg, seed)
        }
        SolverKind::Ballistic => {
            let cfg = BallisticConfig {
                restarts: args.samples,
                ..read_config(&args.config)?
            };
            ballistic_solve(instance, &cfg, seed)
        }
        SolverKind::BruteForce => {
            let clock = std::time::Instant::now();
            let g = brute_force(instance)?;
            Ok(SampleSet {
                records: g
                    .states
                    .into_iter()
                    .map(|bits| SampleRecord {
                        bits,
                        energy: g.energy,
                        count: 1,
                    })
                    .collect(),
                meta: SolverMeta {
                    solver: "bruteforce".into(),
                    config_digest: String::new(),
                    seed,
                    wall_times: vec![clock.elapsed().as_secs_f64()],
                },
            })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(args) => {
            let problem = problem_from(&args.system, args.timepoints, code_from(&args.code)?)?;
            let (_, inst) = problem.encode(args.max_bits)?;
            write_instance_to(&inst, output(&args.out)?)?;
            if args.out.is_some() {
                eprintln!("{}: {} bits", problem.spec.id, inst.n_bits());
            }
        }
        Command::Solve(args) => {
            if args.runs == 0 || args.samples == 0 {
                return Err(Error::InvalidParameter("samples and runs must be positive".into()));
            }
            let inst = read_instance(&args.input)?;
            let sets = (0..args.runs)
                .map(|r| solve_once(&inst, &args, restart_seed(args.seed, r as u64)))
                .collect::<Result<Vec<_>>>()?;
            let mut all = SampleSet::concat(sets).aggregated();
            all.meta.seed = args.seed;
            write_samples_to(&all, output(&args.out)?, args.deterministic)?;
        }
        Command::Decode(args) => {
            let inst = read_instance(&args.input)?;
            let samples = read_samples(&args.samples)?;
            let problem = Problem::from_meta(&inst.meta)?;
            let series = observable_series(&samples, &inst, args.selector, &problem)?;
            let header = vec![
                ("system".to_string(), problem.spec.id.to_string()),
                ("psi0".to_string(), problem.psi0.to_string()),
                ("selector".to_string(), args.selector.to_string()),
            ];
            write_series_to(&series, &header, output(&args.out)?)?;
        }
        Command::Bench(args) => {
            let sizes = parse_timepoints(&args.timepoints)?;
            let code = code_from(&args.code)?;
            let templates = args
                .system
                .iter()
                .map(|&id| {
                    Ok(Problem::new(id, sizes[0])?.with_psi0(args.psi0).with_code(code))
                })
                .collect::<Result<Vec<_>>>()?;
            let cfg = SweepConfig {
                samples: args.samples,
                runs: args.runs,
                seed: args.seed,
                target: args.target,
                span: (args.t0, args.tf),
                ..SweepConfig::default()
            };
            let mut report = run_bench(&templates, &sizes, &args.solver, &cfg)?;
            if args.deterministic {
                report = report.without_timings();
            }
            match &args.out {
                Some(p) => {
                    write_report_json(&report, BufWriter::new(File::create(p)?))?;
                    write_report_csv(&report, BufWriter::new(File::create(p.with_extension("csv"))?))?;
                }
                None => write_report_json(&report, output(&None)?)?,
            }
            for f in &report.fits {
                match (&f.fit, &f.error) {
                    (Some(fit), _) => eprintln!(
                        "{} {}: beta = {}, D = {:e} s, r^2 = {:.4}",
                        f.system, f.solver, fit.beta, fit.d_fit, fit.r_squared
                    ),
                    (None, Some(e)) => eprintln!("{} {}: no fit ({e})", f.system, f.solver),
                    _ => {}
                }
            }
        }
        Command::Oracle(args) => {
            let problem = problem_from(&args.system, args.timepoints, FixedPointCode::default())?;
            let series = oracle_series(&problem)?;
            let header = vec![
                ("system".to_string(), problem.spec.id.to_string()),
                ("psi0".to_string(), problem.psi0.to_string()),
                ("source".to_string(), "exact".to_string()),
            ];
            write_series_to(&series, &header, output(&args.out)?)?;
        }
        Command::Verify(args) => {
            let code = code_from(&args.code)?;
            let ids = if args.system.is_empty() { SystemId::ALL.to_vec() } else { args.system.clone() };
            let problems = ids
                .into_iter()
                .map(|id| Ok(Problem::new(id, args.timepoints)?.with_code(code)))
                .collect::<Result<Vec<_>>>()?;
            let reports = verify::run_all(&problems, args.samples, args.seed)?;
            let mut failed = 0;
            for r in &reports {
                for c in &r.checks {
                    println!("{} {}: {} ({})", if c.passed { "ok  " } else { "FAIL" }, r.suite, c.name, c.detail);
                    failed += usize::from(!c.passed);
                }
            }
            if failed > 0 {
                return Err(Error::InvalidParameter(format!("{failed} verification checks failed")));
            }
        }
    }
    Ok(())
}

/// Parses `argv` and runs it; returns the process exit code
/// (0 success, 1 domain error, 2 usage error).
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli.command)),
            Err(e) => Err(Error::InvalidParameter(e.to_string())),
        },
        None => run(cli.command),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timepoint_ranges() {
        assert_eq!(parse_timepoints("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_timepoints("4").unwrap(), vec![4]);
        assert_eq!(parse_timepoints("2,3,7").unwrap(), vec![2, 3, 7]);
        assert!(parse_timepoints("5..2").is_err());
        assert!(parse_timepoints("0..2").is_err());
        assert!(parse_timepoints("x").is_err());
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(dispatch(["paraqube", "frobnicate"]), 2);
        assert_eq!(dispatch(["paraqube", "generate", "--bogus"]), 2);
        assert_eq!(dispatch(["paraqube", "generate", "--system", "H9"]), 2);
    }

    #[test]
    fn domain_errors_exit_with_one() {
        assert_eq!(dispatch(["paraqube", "solve", "--in", "/nonexistent/file.qubo"]), 1);
        assert_eq!(dispatch(["paraqube", "generate", "--bits", "0", "--out", "/dev/null"]), 1);
    }
}
