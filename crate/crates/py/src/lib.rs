//! Python bindings for `paraqube`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use paraqube::bench::{fit_points, time_to_solution as tts};
use paraqube::models::{InitialState, SystemId};
use paraqube::observables::{observable_series, Selector};
use paraqube::problem::Problem as CoreProblem;
use paraqube::qubo::{read_instance, write_instance, Bitstring, FixedPointCode, QuboInstance, DEFAULT_MAX_BITS};
use paraqube::solvers::{self, BallisticConfig, SaConfig, SampleRecord, SampleSet, SolverMeta};

fn err(e: paraqube::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_bits(bits: &str) -> PyResult<Bitstring> {
    bits.parse().map_err(err)
}

/// One system on a time grid with a fixed-point code.
#[pyclass(module = "pyparaqube")]
struct Problem {
    inner: CoreProblem,
}

#[pymethods]
impl Problem {
    #[new]
    #[pyo3(signature = (system, timepoints, bits=2, range_exp=0, psi0="basis:0", t0=0.0, tf=1.0))]
    fn new(system: &str, timepoints: usize, bits: u32, range_exp: i32, psi0: &str, t0: f64, tf: f64) -> PyResult<Self> {
        let id: SystemId = system.parse().map_err(err)?;
        let psi0: InitialState = psi0.parse().map_err(err)?;
        let grid = paraqube::models::TimeGrid::new(t0, tf, timepoints).map_err(err)?;
        let inner = CoreProblem::new(id, timepoints)
            .map_err(err)?
            .with_grid(grid)
            .with_psi0(psi0)
            .with_code(FixedPointCode::new(bits, range_exp).map_err(err)?);
        Ok(Self { inner })
    }

    #[getter]
    fn n_vars(&self) -> usize {
        self.inner.n_vars()
    }

    #[getter]
    fn n_bits(&self) -> usize {
        self.inner.n_bits()
    }

    fn instance(&self) -> PyResult<Instance> {
        Ok(Instance {
            inner: self.inner.instance().map_err(err)?,
        })
    }

    /// Exact ground energy and ground bitstrings of the instance.
    fn ground_state(&self) -> PyResult<(f64, Vec<String>)> {
        let (sys, inst) = self.inner.encode(DEFAULT_MAX_BITS).map_err(err)?;
        let g = solvers::lattice_ground_state(&sys.a_real, &sys.phi_real, &inst, solvers::LATTICE_MAX_NODES).map_err(err)?;
        Ok((g.energy, g.states.iter().map(|b| b.to_string()).collect()))
    }

    /// Exact `(t, [<sigma_z> per qubit])` at every grid point.
    fn oracle_sigma_z(&self) -> PyResult<Vec<(f64, Vec<f64>)>> {
        let s = paraqube::observables::oracle_series(&self.inner).map_err(err)?;
        Ok((0..s.n_points())
            .map(|n| (self.inner.grid.time(n), (0..s.n_qubits).map(|q| s.sigma_z(n, q)).collect()))
            .collect())
    }

    /// `(t, qubit, sigma_z, fidelity)` rows for one bitstring of `instance`.
    fn decode_series(&self, instance: &Instance, bits: &str) -> PyResult<Vec<(f64, usize, f64, f64)>> {
        let b = parse_bits(bits)?;
        let set = SampleSet {
            records: vec![SampleRecord {
                energy: instance.inner.energy(b.as_slice()),
                bits: b,
                count: 1,
            }],
            meta: SolverMeta::default(),
        };
        let s = observable_series(&set, &instance.inner, Selector::BestEnergy, &self.inner).map_err(err)?;
        Ok(s.rows.iter().map(|r| (r.t, r.qubit, r.sigma_z, r.fidelity)).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem({}, timepoints={}, bits={}, range_exp={}, psi0={})",
            self.inner.spec.id,
            self.inner.grid.n_points(),
            self.inner.code.bits(),
            self.inner.code.range_exp(),
            self.inner.psi0
        )
    }
}

/// A QUBO instance.
#[pyclass(module = "pyparaqube")]
struct Instance {
    inner: QuboInstance,
}

#[pymethods]
impl Instance {
    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: read_instance(path).map_err(err)?,
        })
    }

    fn write(&self, path: &str) -> PyResult<()> {
        write_instance(&self.inner, path).map_err(err)
    }

    #[getter]
    fn n_bits(&self) -> usize {
        self.inner.n_bits()
    }

    #[getter]
    fn offset(&self) -> f64 {
        self.inner.offset
    }

    #[getter]
    fn linear(&self) -> Vec<f64> {
        self.inner.linear.clone()
    }

    #[getter]
    fn couplings(&self) -> Vec<(usize, usize, f64)> {
        self.inner.couplings.clone()
    }

    fn energy(&self, bits: &str) -> PyResult<f64> {
        let b = parse_bits(bits)?;
        paraqube::qubo::qubo_energy(&self.inner, b.as_slice()).map_err(err)
    }

    /// Decoded real components of a bitstring.
    fn decode(&self, bits: &str) -> PyResult<Vec<f64>> {
        let b = parse_bits(bits)?;
        self.inner.decode_components(b.as_slice()).map_err(err)
    }
}

fn records(set: SampleSet) -> Vec<(String, f64, u64)> {
    set.aggregated()
        .records
        .into_iter()
        .map(|r| (r.bits.to_string(), r.energy, r.count))
        .collect()
}

/// Simulated annealing; returns `(bits, energy, count)` sorted by energy.
#[pyfunction]
#[pyo3(signature = (instance, samples=100, seed=0, sweeps=1000, beta_start=1.0, beta_end=50.0))]
fn simulated_annealing(
    py: Python<'_>,
    instance: &Instance,
    samples: usize,
    seed: u64,
    sweeps: usize,
    beta_start: f64,
    beta_end: f64,
) -> PyResult<Vec<(String, f64, u64)>> {
    let cfg = SaConfig {
        restarts: samples,
        sweeps,
        beta_start,
        beta_end,
        ..SaConfig::default()
    };
    let inst = &instance.inner;
    let set = py.detach(|| solvers::simulated_annealing(inst, &cfg, seed)).map_err(err)?;
    Ok(records(set))
}

/// Ballistic heuristic; returns `(bits, energy, count)` sorted by energy.
#[pyfunction]
#[pyo3(signature = (instance, samples=100, seed=0, steps=1000))]
fn ballistic_solve(py: Python<'_>, instance: &Instance, samples: usize, seed: u64, steps: usize) -> PyResult<Vec<(String, f64, u64)>> {
    let cfg = BallisticConfig {
        restarts: samples,
        steps,
        ..BallisticConfig::default()
    };
    let inst = &instance.inner;
    let set = py.detach(|| solvers::ballistic_solve(inst, &cfg, seed)).map_err(err)?;
    Ok(records(set))
}

/// Exhaustive minimum: `(energy, [bits])`.
#[pyfunction]
fn brute_force(py: Python<'_>, instance: &Instance) -> PyResult<(f64, Vec<String>)> {
    let inst = &instance.inner;
    let g = py.detach(|| solvers::brute_force(inst)).map_err(err)?;
    Ok((g.energy, g.states.iter().map(|b| b.to_string()).collect()))
}

#[pyfunction]
#[pyo3(signature = (p_success, p_target=0.99, t_run=1.0))]
fn time_to_solution(p_success: f64, p_target: f64, t_run: f64) -> PyResult<f64> {
    tts(p_success, p_target, t_run).map_err(err)
}

/// Fits `tts = D exp(n / beta)`; returns `(D, beta, r_squared)`.
#[pyfunction]
fn fit_exponential(n_vars: Vec<f64>, tts: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    if n_vars.len() != tts.len() {
        return Err(PyValueError::new_err("n_vars and tts differ in length"));
    }
    let points: Vec<(f64, f64)> = n_vars.into_iter().zip(tts).collect();
    let f = fit_points(&points).map_err(err)?;
    Ok((f.d_fit, f.beta, f.r_squared))
}

#[pymodule]
fn pyparaqube(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Problem>()?;
    m.add_class::<Instance>()?;
    m.add_function(wrap_pyfunction!(simulated_annealing, m)?)?;
    m.add_function(wrap_pyfunction!(ballistic_solve, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force, m)?)?;
    m.add_function(wrap_pyfunction!(time_to_solution, m)?)?;
    m.add_function(wrap_pyfunction!(fit_exponential, m)?)?;
    m.add("SYSTEMS", SystemId::ALL.iter().map(|s| s.as_str()).collect::<Vec<_>>())?;
    Ok(())
}
