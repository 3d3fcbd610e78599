//! Success probability, time-to-solution and size sweeps with exponential fits.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Serialize, Serializer};

use crate::models::TimeGrid;
use crate::problem::Problem;
use crate::qubo::DEFAULT_MAX_BITS;
use crate::solvers::{
    ballistic_solve, brute_force, lattice_ground_state, restart_seed, simulated_annealing, BallisticConfig,
    GroundStates, SaConfig, SampleSet, BRUTE_FORCE_MAX_BITS, LATTICE_MAX_NODES,
};
use crate::{Error, Result};

pub const DEFAULT_ENERGY_TOL: f64 = 1e-9;
pub const DEFAULT_TARGET: f64 = 0.99;

/// Fraction of samples within `tol` of the ground energy.
pub fn success_probability(samples: &SampleSet, ground_energy: f64, tol: f64) -> Result<f64> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be non-negative, got {tol}")));
    }
    let total = samples.total_count();
    if total == 0 {
        return Err(Error::EmptySamples);
    }
    let hits: u64 = samples
        .records
        .iter()
        .filter(|r| r.energy <= ground_energy + tol)
        .map(|r| r.count)
        .sum();
    Ok(hits as f64 / total as f64)
}

/// `max(1, ln(1 - target) / ln(1 - p)) * t_run`; infinite when `p = 0`.
pub fn time_to_solution(p_success: f64, p_target: f64, t_run: f64) -> Result<f64> {
    if !(p_target > 0.0 && p_target < 1.0) {
        return Err(Error::InvalidParameter(format!("target probability must be in (0, 1), got {p_target}")));
    }
    if !(0.0..=1.0).contains(&p_success) {
        return Err(Error::InvalidParameter(format!("success probability must be in [0, 1], got {p_success}")));
    }
    if !(t_run > 0.0 && t_run.is_finite()) {
        return Err(Error::InvalidParameter(format!("run time must be positive, got {t_run}")));
    }
    if p_success == 0.0 {
        return Ok(f64::INFINITY);
    }
    if p_success == 1.0 {
        return Ok(t_run);
    }
    let repetitions = (1.0 - p_target).ln() / (1.0 - p_success).ln();
    Ok(repetitions.max(1.0) * t_run)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Sa,
    Ballistic,
    BruteForce,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Sa => "sa",
            SolverKind::Ballistic => "ballistic",
            SolverKind::BruteForce => "bruteforce",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sa" => Ok(SolverKind::Sa),
            "ballistic" => Ok(SolverKind::Ballistic),
            "bruteforce" | "brute" => Ok(SolverKind::BruteForce),
            other => Err(Error::InvalidParameter(format!(
                "unknown solver '{other}' (expected sa, ballistic or bruteforce)"
            ))),
        }
    }
}

/// How a record's ground energy was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundTruth {
    BruteForce,
    /// Exact branch-and-bound over the fixed-point lattice.
    Lattice,
    None,
}

fn finite_or_inf<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        None => s.serialize_none(),
        Some(x) if x.is_finite() => s.serialize_f64(*x),
        Some(x) if *x > 0.0 => s.serialize_str("inf"),
        Some(_) => s.serialize_str("nan"),
    }
}

fn float_or_inf<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    finite_or_inf(&Some(*v), s)
}

/// One (system, size, solver) cell of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub system: String,
    pub n_timepoints: usize,
    /// Real variables before binarisation, `2 L N`.
    pub n_vars: usize,
    pub n_bits: usize,
    pub solver: String,
    pub samples: usize,
    pub runs: usize,
    pub ground_truth: GroundTruth,
    pub ground_energy: Option<f64>,
    /// Mean over runs; absent without a ground truth.
    pub p_success: Option<f64>,
    /// Mean wall time of one run, seconds.
    pub t_run: f64,
    #[serde(serialize_with = "finite_or_inf")]
    pub tts: Option<f64>,
    pub run_success: Vec<f64>,
    pub run_times: Vec<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    /// `D` in `TTS = D exp(n / beta)`, seconds.
    pub d_fit: f64,
    #[serde(serialize_with = "float_or_inf")]
    pub beta: f64,
    pub r_squared: f64,
    pub points: usize,
    /// Records left out for infinite or missing TTS.
    pub excluded: usize,
    pub warning: Option<String>,
}

/// Least squares of `ln y` against `x`.
pub fn fit_points(points: &[(f64, f64)]) -> Result<FitResult> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, y)| y.is_finite() && *y > 0.0)
        .map(|&(x, y)| (x, y.ln()))
        .collect();
    let excluded = points.len() - usable.len();
    let mut xs: Vec<f64> = usable.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 2 {
        return Err(Error::Fit(format!(
            "need finite TTS at two or more sizes, have {} usable points at {} sizes",
            usable.len(),
            xs.len()
        )));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = usable.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = usable.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    let (beta, warning) = if slope > 0.0 {
        (1.0 / slope, None)
    } else {
        (f64::INFINITY, Some(format!("non-increasing TTS (slope {slope:e}); beta reported as infinite")))
    };
    Ok(FitResult {
        d_fit: intercept.exp(),
        beta,
        r_squared,
        points: usable.len(),
        excluded,
        warning,
    })
}

/// Fits `TTS = D exp(n_vars / beta)` over the records.
pub fn fit_exponential(records: &[RunRecord]) -> Result<FitResult> {
    let missing = records.iter().filter(|r| r.tts.is_none()).count();
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| r.tts.map(|t| (r.n_vars as f64, t)))
        .collect();
    let mut fit = fit_points(&points)?;
    fit.excluded += missing;
    Ok(fit)
}

/// Averages TTS across systems at each `n_vars`, then fits.
pub fn fit_pooled(records: &[RunRecord]) -> Result<FitResult> {
    let mut groups: BTreeMap<usize, Vec<Option<f64>>> = BTreeMap::new();
    for r in records {
        groups.entry(r.n_vars).or_default().push(r.tts);
    }
    let points: Vec<(f64, f64)> = groups
        .iter()
        .filter(|(_, v)| v.iter().all(Option::is_some))
        .map(|(&n, v)| (n as f64, v.iter().map(|t| t.unwrap_or(f64::NAN)).sum::<f64>() / v.len() as f64))
        .collect();
    let missing = groups.len() - points.len();
    let mut fit = fit_points(&points)?;
    fit.excluded += missing;
    Ok(fit)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    pub samples: usize,
    pub runs: usize,
    pub seed: u64,
    pub target: f64,
    pub energy_tol: f64,
    /// Time span `[t0, tf]` shared by every size.
    pub span: (f64, f64),
    pub sa: SaConfig,
    pub ballistic: BallisticConfig,
    /// Up to this many bits ground truth comes from enumeration, above it
    /// from the lattice search.
    pub enumerate_up_to: usize,
    pub lattice_max_nodes: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            samples: 1000,
            runs: 20,
            seed: 0,
            target: DEFAULT_TARGET,
            energy_tol: DEFAULT_ENERGY_TOL,
            span: (0.0, 1.0),
            sa: SaConfig::default(),
            ballistic: BallisticConfig::default(),
            enumerate_up_to: 24,
            lattice_max_nodes: LATTICE_MAX_NODES,
        }
    }
}

fn ground_truth(
    sys: &crate::clock::ClockSystem,
    inst: &crate::qubo::QuboInstance,
    cfg: &SweepConfig,
) -> (GroundTruth, Option<GroundStates>, Option<String>) {
    if inst.n_bits() <= cfg.enumerate_up_to.min(BRUTE_FORCE_MAX_BITS) {
        return match brute_force(inst) {
            Ok(g) => (GroundTruth::BruteForce, Some(g), None),
            Err(e) => (GroundTruth::None, None, Some(e.to_string())),
        };
    }
    match lattice_ground_state(&sys.a_real, &sys.phi_real, inst, cfg.lattice_max_nodes) {
        Ok(g) => (GroundTruth::Lattice, Some(g), None),
        Err(lattice_err) if inst.n_bits() <= BRUTE_FORCE_MAX_BITS => match brute_force(inst) {
            Ok(g) => (GroundTruth::BruteForce, Some(g), None),
            Err(e) => (GroundTruth::None, None, Some(format!("{lattice_err}; {e}"))),
        },
        Err(e) => (GroundTruth::None, None, Some(e.to_string())),
    }
}

/// Runs `solver` on `template` at each number of time points.
///
/// Records with no ground truth, or a solver that cannot run at that size,
/// carry a note and no TTS instead of failing the sweep.
pub fn sweep(template: &Problem, sizes: &[usize], solver: SolverKind, cfg: &SweepConfig) -> Result<Vec<RunRecord>> {
    if cfg.samples == 0 || cfg.runs == 0 {
        return Err(Error::InvalidParameter("samples and runs must be positive".into()));
    }
    time_to_solution(0.5, cfg.target, 1.0)?;
    let mut out = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let problem = template.with_grid(TimeGrid::new(cfg.span.0, cfg.span.1, n)?);
        let mut rec = RunRecord {
            system: template.spec.id.to_string(),
            n_timepoints: n,
            n_vars: problem.n_vars(),
            n_bits: problem.n_bits(),
            solver: solver.to_string(),
            samples: cfg.samples,
            runs: cfg.runs,
            ground_truth: GroundTruth::None,
            ground_energy: None,
            p_success: None,
            t_run: 0.0,
            tts: None,
            run_success: Vec::new(),
            run_times: Vec::new(),
            note: None,
        };
        let (sys, inst) = match problem.encode(DEFAULT_MAX_BITS) {
            Ok(v) => v,
            Err(e) => {
                rec.note = Some(e.to_string());
                out.push(rec);
                continue;
            }
        };
        let (method, ground, note) = ground_truth(&sys, &inst, cfg);
        rec.ground_truth = method;
        rec.ground_energy = ground.as_ref().map(|g| g.energy);
        rec.note = note;

        for run in 0..cfg.runs {
            let seed = restart_seed(cfg.seed, run as u64);
            let result = match solver {
                SolverKind::Sa => simulated_annealing(
                    &inst,
                    &SaConfig {
                        restarts: cfg.samples,
                        ..cfg.sa.clone()
                    },
                    seed,
                )
                .map(|s| (s.meta.wall_times[0], s)),
                SolverKind::Ballistic => ballistic_solve(
                    &inst,
                    &BallisticConfig {
                        restarts: cfg.samples,
                        ..cfg.ballistic.clone()
                    },
                    seed,
                )
                .map(|s| (s.meta.wall_times[0], s)),
                SolverKind::BruteForce => {
                    let clock = Instant::now();
                    brute_force(&inst).map(|g| {
                        let t = clock.elapsed().as_secs_f64();
                        (t, ground_sample_set(&g))
                    })
                }
            };
            let (t, samples) = match result {
                Ok(v) => v,
                Err(e) => {
                    rec.note = Some(e.to_string());
                    break;
                }
            };
            rec.run_times.push(t.max(f64::MIN_POSITIVE));
            if let Some(g) = &ground {
                rec.run_success.push(success_probability(&samples, g.energy, cfg.energy_tol)?);
            }
        }
        if !rec.run_times.is_empty() {
            rec.t_run = rec.run_times.iter().sum::<f64>() / rec.run_times.len() as f64;
        }
        if ground.is_some() && rec.run_success.len() == cfg.runs {
            let p = rec.run_success.iter().sum::<f64>() / cfg.runs as f64;
            rec.p_success = Some(p);
            rec.tts = Some(time_to_solution(p, cfg.target, rec.t_run)?);
        }
        out.push(rec);
    }
    Ok(out)
}

fn ground_sample_set(g: &GroundStates) -> SampleSet {
    SampleSet {
        records: g
            .states
            .iter()
            .map(|b| crate::solvers::SampleRecord {
                bits: b.clone(),
                energy: g.energy,
                count: 1,
            })
            .collect(),
        meta: crate::solvers::SolverMeta {
            solver: "bruteforce".into(),
            ..Default::default()
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitEntry {
    /// A system id, or `pooled` for the average over systems.
    pub system: String,
    pub solver: String,
    pub fit: Option<FitResult>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub config: SweepConfig,
    pub records: Vec<RunRecord>,
    pub fits: Vec<FitEntry>,
}

/// Sweeps every (system, solver) pair and fits per system and pooled.
pub fn run_bench(templates: &[Problem], sizes: &[usize], solvers: &[SolverKind], cfg: &SweepConfig) -> Result<BenchReport> {
    let mut records = Vec::new();
    let mut fits = Vec::new();
    let entry = |system: String, solver: SolverKind, fit: Result<FitResult>| match fit {
        Ok(f) => FitEntry {
            system,
            solver: solver.to_string(),
            fit: Some(f),
            error: None,
        },
        Err(e) => FitEntry {
            system,
            solver: solver.to_string(),
            fit: None,
            error: Some(e.to_string()),
        },
    };
    for &solver in solvers {
        let mut per_solver = Vec::new();
        for t in templates {
            let recs = sweep(t, sizes, solver, cfg)?;
            fits.push(entry(t.spec.id.to_string(), solver, fit_exponential(&recs)));
            per_solver.extend(recs);
        }
        fits.push(entry("pooled".into(), solver, fit_pooled(&per_solver)));
        records.extend(per_solver);
    }
    Ok(BenchReport {
        config: cfg.clone(),
        records,
        fits,
    })
}

impl BenchReport {
    pub fn pooled_fit(&self, solver: SolverKind) -> Option<&FitResult> {
        self.fits
            .iter()
            .find(|f| f.system == "pooled" && f.solver == solver.as_str())
            .and_then(|f| f.fit.as_ref())
    }

    /// Wall-clock fields zeroed, for reproducible output.
    pub fn without_timings(&self) -> BenchReport {
        let mut r = self.clone();
        for rec in &mut r.records {
            rec.t_run = 0.0;
            rec.tts = rec.tts.map(|t| if t.is_finite() { 0.0 } else { t });
            rec.run_times.iter_mut().for_each(|t| *t = 0.0);
        }
        for f in r.fits.iter_mut().filter_map(|f| f.fit.as_mut()) {
            f.d_fit = 0.0;
        }
        r
    }
}

pub fn write_report_json<W: Write>(report: &BenchReport, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)?;
    Ok(())
}

/// One line per record: `system,n_timepoints,n_vars,n_bits,solver,p_success,t_run,tts`.
pub fn write_report_csv<W: Write>(report: &BenchReport, mut w: W) -> Result<()> {
    writeln!(w, "system,n_timepoints,n_vars,n_bits,solver,ground_truth,p_success,t_run,tts")?;
    for r in &report.records {
        let gt = match r.ground_truth {
            GroundTruth::BruteForce => "bruteforce",
            GroundTruth::Lattice => "lattice",
            GroundTruth::None => "none",
        };
        let p = r.p_success.map(|p| p.to_string()).unwrap_or_default();
        let tts = r.tts.map(|t| t.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.system, r.n_timepoints, r.n_vars, r.n_bits, r.solver, gt, p, r.t_run, tts
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report(report: &BenchReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_report_json(report, BufWriter::new(File::create(path)?))?;
    write_report_csv(report, BufWriter::new(File::create(path.with_extension("csv"))?))
}
