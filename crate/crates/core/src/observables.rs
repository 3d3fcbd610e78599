//! Decoded histories and the observables read off them.
//!
//! Qubit 0 is the most significant bit of the basis index, i.e. the leftmost
//! factor of a tensor product.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::clock::HistoryState;
use crate::numerics::ComplexVector;
use crate::problem::Problem;
use crate::qubo::{decode_solution, QuboInstance};
use crate::solvers::{SampleRecord, SampleSet};
use crate::{Error, Result};

/// Raw decoded history of `bits`; slices are not normalised.
pub fn history_from_sample(bits: &[u8], instance: &QuboInstance) -> Result<HistoryState> {
    Ok(decode_solution(bits, instance)?.1)
}

fn qubit_count(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::DimensionMismatch(format!("dimension {dim} is not a qubit register")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// `<psi|sigma_z^(qubit)|psi> / <psi|psi>`.
pub fn sigma_z_expectation(state: &ComplexVector, qubit: usize) -> Result<f64> {
    let n = qubit_count(state.dim())?;
    if qubit >= n {
        return Err(Error::InvalidParameter(format!("qubit {qubit} out of range for {n} qubits")));
    }
    let norm = state.norm_sqr();
    if norm == 0.0 {
        return Err(Error::DegenerateSample("zero state has no expectation values".into()));
    }
    let shift = n - 1 - qubit;
    let signed: f64 = state
        .entries()
        .iter()
        .enumerate()
        .map(|(k, a)| if (k >> shift) & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum();
    Ok((signed / norm).clamp(-1.0, 1.0))
}

/// `|<a|b>|^2 / (<a|a> <b|b>)`.
pub fn fidelity(a: &ComplexVector, b: &ComplexVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("states of dimension {} and {}", a.dim(), b.dim())));
    }
    let (na, nb) = (a.norm_sqr(), b.norm_sqr());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateSample("fidelity with a zero state".into()));
    }
    Ok((a.inner(b).norm_sqr() / (na * nb)).clamp(0.0, 1.0))
}

/// Which sample an observable series is computed from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Selector {
    #[default]
    BestEnergy,
    /// `k`-th distinct energy level counting from 0.
    KthLowest(usize),
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::BestEnergy => write!(f, "best"),
            Selector::KthLowest(k) => write!(f, "level:{k}"),
        }
    }
}

impl FromStr for Selector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "best" => Ok(Selector::BestEnergy),
            other => other
                .strip_prefix("level:")
                .and_then(|k| k.parse().ok())
                .map(Selector::KthLowest)
                .ok_or_else(|| Error::InvalidParameter(format!("selector '{s}' should be 'best' or 'level:<k>'"))),
        }
    }
}

/// Picks a record; ties in energy go to the smallest bitstring.
pub fn select_sample(samples: &SampleSet, selector: Selector) -> Result<SampleRecord> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let agg = samples.aggregated();
    let k = match selector {
        Selector::BestEnergy => 0,
        Selector::KthLowest(k) => k,
    };
    let mut level = 0;
    let mut last = agg.records[0].energy;
    for r in &agg.records {
        if r.energy > last + 1e-9 {
            level += 1;
            last = r.energy;
        }
        if level == k {
            return Ok(r.clone());
        }
    }
    Err(Error::InvalidParameter(format!("sample set has only {} energy levels", level + 1)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesRow {
    pub t: f64,
    pub qubit: usize,
    pub sigma_z: f64,
    pub sigma_z_oracle: f64,
    /// Slice fidelity against the oracle.
    pub fidelity: f64,
}

#[derive(Clone, Debug)]
pub struct ObservableSeries {
    pub rows: Vec<SeriesRow>,
    pub n_qubits: usize,
    /// Raw decoded slices.
    pub history: HistoryState,
    pub sample: Option<SampleRecord>,
}

impl ObservableSeries {
    pub fn sigma_z(&self, slice: usize, qubit: usize) -> f64 {
        self.rows[slice * self.n_qubits + qubit].sigma_z
    }

    pub fn fidelity(&self, slice: usize) -> f64 {
        self.rows[slice * self.n_qubits].fidelity
    }

    pub fn n_points(&self) -> usize {
        self.history.n_points()
    }

    /// Largest `|sigma_z - sigma_z_oracle|` over all rows.
    pub fn max_oracle_deviation(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.sigma_z - r.sigma_z_oracle).abs())
            .fold(0.0, f64::max)
    }
}

fn series_for(history: HistoryState, problem: &Problem, sample: Option<SampleRecord>) -> Result<ObservableSeries> {
    let oracle = problem.oracle()?;
    if oracle.len() != history.n_points() || oracle[0].dim() != history.dim() {
        return Err(Error::DimensionMismatch("decoded history does not match the problem".into()));
    }
    let n_qubits = qubit_count(history.dim())?;
    let per_slice: Vec<Vec<SeriesRow>> = (0..history.n_points())
        .into_par_iter()
        .map(|n| {
            let slice = history.slice(n);
            let f = fidelity(slice, &oracle[n])?;
            (0..n_qubits)
                .map(|q| {
                    Ok(SeriesRow {
                        t: problem.grid.time(n),
                        qubit: q,
                        sigma_z: sigma_z_expectation(slice, q)?,
                        sigma_z_oracle: sigma_z_expectation(&oracle[n], q)?,
                        fidelity: f,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(ObservableSeries {
        rows: per_slice.into_iter().flatten().collect(),
        n_qubits,
        history,
        sample,
    })
}

/// Series of the selected sample next to the exact evolution of `problem`.
pub fn observable_series(
    samples: &SampleSet,
    instance: &QuboInstance,
    selector: Selector,
    problem: &Problem,
) -> Result<ObservableSeries> {
    let rec = select_sample(samples, selector)?;
    let history = history_from_sample(rec.bits.as_slice(), instance)?;
    series_for(history, problem, Some(rec))
}

/// Series of the exact evolution itself.
pub fn oracle_series(problem: &Problem) -> Result<ObservableSeries> {
    let history = HistoryState::new(problem.oracle()?)?;
    series_for(history, problem, None)
}

/// Writes `t,qubit,sigma_z,fidelity` after `# key value` header lines.
pub fn write_series_to<W: Write>(series: &ObservableSeries, header: &[(String, String)], mut w: W) -> Result<()> {
    for (k, v) in header {
        writeln!(w, "# {k} {v}")?;
    }
    if let Some(s) = &series.sample {
        writeln!(w, "# sample {}", s.bits)?;
        writeln!(w, "# energy {}", s.energy)?;
    }
    writeln!(w, "t,qubit,sigma_z,fidelity")?;
    for r in &series.rows {
        writeln!(w, "{},{},{},{}", r.t, r.qubit, r.sigma_z, r.fidelity)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series(series: &ObservableSeries, header: &[(String, String)], path: impl AsRef<Path>) -> Result<()> {
    write_series_to(series, header, BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::SystemId;
    use crate::numerics::C64;
    use crate::qubo::FixedPointCode;
    use crate::solvers::{lattice_ground_state, SolverMeta, LATTICE_MAX_NODES};

    fn v(re: &[f64]) -> ComplexVector {
        ComplexVector::new(re.iter().map(|&x| C64::new(x, 0.0)).collect()).unwrap()
    }

    #[test]
    fn sigma_z_basics() {
        assert_eq!(sigma_z_expectation(&v(&[1.0, 0.0]), 0).unwrap(), 1.0);
        assert_eq!(sigma_z_expectation(&v(&[0.0, 3.0]), 0).unwrap(), -1.0);
        let bell = v(&[0.0, 1.0, 1.0, 0.0]);
        assert!(sigma_z_expectation(&bell, 0).unwrap().abs() < 1e-15);
        assert!(sigma_z_expectation(&bell, 1).unwrap().abs() < 1e-15);
        // |01>: qubit 0 up, qubit 1 down
        let s = v(&[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(sigma_z_expectation(&s, 0).unwrap(), 1.0);
        assert_eq!(sigma_z_expectation(&s, 1).unwrap(), -1.0);
        assert!(matches!(sigma_z_expectation(&v(&[0.0, 0.0]), 0), Err(Error::DegenerateSample(_))));
        assert!(sigma_z_expectation(&v(&[1.0, 0.0, 0.0]), 0).is_err());
        assert!(sigma_z_expectation(&v(&[1.0, 0.0]), 1).is_err());
    }

    #[test]
    fn fidelity_basics() {
        let a = ComplexVector::new(vec![C64::new(0.6, 0.1), C64::new(-0.2, 0.7)]).unwrap();
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!((fidelity(&a, &a.scale(C64::new(0.0, 2.0))).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fidelity(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert!(fidelity(&v(&[0.0, 0.0]), &a).is_err());
    }

    #[test]
    fn all_zero_bits_decode_to_minus_scale() {
        let p = Problem::new(SystemId::H1, 2).unwrap().with_code(FixedPointCode::new(3, 1).unwrap());
        let inst = p.instance().unwrap();
        let h = history_from_sample(&vec![0; inst.n_bits()], &inst).unwrap();
        for s in h.slices() {
            for a in s.entries() {
                assert_eq!(*a, C64::new(-2.0, -2.0));
            }
        }
        assert!(history_from_sample(&[0, 1], &inst).is_err());
    }

    #[test]
    fn selector_levels() {
        let rec = |b: &str, e: f64| SampleRecord {
            bits: b.parse().unwrap(),
            energy: e,
            count: 1,
        };
        let set = SampleSet {
            records: vec![rec("11", 0.5), rec("10", -1.0), rec("01", -1.0), rec("00", 0.2)],
            meta: SolverMeta::default(),
        };
        assert_eq!(select_sample(&set, Selector::BestEnergy).unwrap().bits.to_string(), "01");
        assert_eq!(select_sample(&set, Selector::KthLowest(1)).unwrap().energy, 0.2);
        assert_eq!(select_sample(&set, Selector::KthLowest(2)).unwrap().energy, 0.5);
        assert!(select_sample(&set, Selector::KthLowest(3)).is_err());
        assert!(matches!(select_sample(&SampleSet::default(), Selector::BestEnergy), Err(Error::EmptySamples)));
        assert_eq!("level:2".parse::<Selector>().unwrap(), Selector::KthLowest(2));
        assert_eq!(Selector::BestEnergy.to_string().parse::<Selector>().unwrap(), Selector::BestEnergy);
    }

    #[test]
    fn single_slice_ground_sample_is_close_to_psi0() {
        let p = Problem::new(SystemId::H4, 1).unwrap().with_code(FixedPointCode::new(4, 0).unwrap());
        let (sys, inst) = p.encode(1 << 20).unwrap();
        let g = lattice_ground_state(&sys.a_real, &sys.phi_real, &inst, LATTICE_MAX_NODES).unwrap();
        let set = SampleSet {
            records: vec![SampleRecord {
                bits: g.states[0].clone(),
                energy: g.energy,
                count: 1,
            }],
            meta: SolverMeta::default(),
        };
        let s = observable_series(&set, &inst, Selector::BestEnergy, &p).unwrap();
        assert_eq!(s.n_points(), 1);
        let l = 4.0;
        let bound = 1.0 - 4.0 * l * 4f64.powi(-4);
        assert!(s.fidelity(0) >= bound, "{}", s.fidelity(0));
        let step = FixedPointCode::new(4, 0).unwrap().step();
        let psi0 = p.initial_state().unwrap();
        assert!(s.history.slice(0).max_abs_diff(&psi0) <= step);
    }

    #[test]
    fn oracle_series_h6_is_permutation_symmetric() {
        let p = Problem::new(SystemId::H6, 3).unwrap();
        let s = oracle_series(&p).unwrap();
        assert_eq!(s.n_qubits, 3);
        for n in 0..3 {
            assert!((s.sigma_z(n, 0) - s.sigma_z(n, 1)).abs() < 1e-12);
            assert!((s.sigma_z(n, 0) - s.sigma_z(n, 2)).abs() < 1e-12);
            assert!((s.fidelity(n) - 1.0).abs() < 1e-12);
        }
        let mut buf = Vec::new();
        write_series_to(&s, &[("system".into(), "H6".into())], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# system H6\nt,qubit,sigma_z,fidelity\n0,0,1,1\n"));
        assert_eq!(text.lines().count(), 2 + 9);
    }
}
