//! Python bindings: the main chain-analysis types and operations.
//!
//! Build the cdylib and import it as `pilift_py`; `python/smoke_test.py` in
//! the repository root shows the expected usage.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use pilift::sensitivity::CouplingSpec;
use pilift::verify::TrialConfig;
use pilift::{ElementaryPerturbation, SimulationEstimate, SplitMix64};

fn err(e: pilift::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A validated row-stochastic transition matrix.
#[pyclass(name = "TransitionMatrix", frozen)]
struct PyTransitionMatrix {
    inner: pilift::TransitionMatrix,
}

#[pymethods]
impl PyTransitionMatrix {
    #[new]
    #[pyo3(signature = (rows, labels=None, tolerance=1e-9))]
    fn new(rows: Vec<Vec<f64>>, labels: Option<Vec<String>>, tolerance: f64) -> PyResult<Self> {
        let m = pilift::TransitionMatrix::validate(&rows, tolerance).map_err(err)?;
        let m = match labels {
            Some(l) => m.with_labels(l).map_err(err)?,
            None => m,
        };
        Ok(PyTransitionMatrix { inner: m })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn labels(&self) -> Option<Vec<String>> {
        self.inner.labels().map(<[String]>::to_vec)
    }

    fn entry(&self, i: usize, j: usize) -> PyResult<f64> {
        self.inner.check_state(i).map_err(err)?;
        self.inner.check_state(j).map_err(err)?;
        Ok(self.inner.entry(i, j))
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.to_rows()
    }

    fn structure<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let report = pilift::structure(&self.inner);
        let dict = PyDict::new(py);
        dict.set_item("irreducible", report.irreducible)?;
        dict.set_item("aperiodic", report.aperiodic)?;
        dict.set_item("period", report.period)?;
        dict.set_item("communicating_classes", report.communicating_classes)?;
        Ok(dict)
    }

    fn is_irreducible(&self) -> bool {
        pilift::structure(&self.inner).irreducible
    }

    fn __repr__(&self) -> String {
        format!("TransitionMatrix(n={})", self.inner.n())
    }
}

fn wrap(m: pilift::TransitionMatrix) -> PyTransitionMatrix {
    PyTransitionMatrix { inner: m }
}

fn estimate_dict<'py>(py: Python<'py>, e: &SimulationEstimate) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    dict.set_item("mean", e.mean)?;
    dict.set_item("std_error", e.std_error)?;
    dict.set_item("samples", e.samples)?;
    dict.set_item("seed", e.seed)?;
    Ok(dict)
}

/// Stationary distribution by dense linear solve.
#[pyfunction]
fn stationary_linear(m: &PyTransitionMatrix) -> PyResult<Vec<f64>> {
    Ok(pilift::stationary_linear(&m.inner).map_err(err)?.probs().to_vec())
}

/// Stationary distribution by power iteration (aperiodic chains only).
#[pyfunction]
#[pyo3(signature = (m, tol=1e-12, max_iters=200_000))]
fn stationary_power(m: &PyTransitionMatrix, tol: f64, max_iters: usize) -> PyResult<Vec<f64>> {
    Ok(pilift::stationary_power(&m.inner, tol, max_iters).map_err(err)?.probs().to_vec())
}

/// pi(s0) computed as the reciprocal of the expected return time.
#[pyfunction]
fn stationary_via_return_time(m: &PyTransitionMatrix, s0: usize) -> PyResult<f64> {
    pilift::stationary_via_return_time(&m.inner, s0).map_err(err)
}

/// Expected hitting times to `s0` and the expected return time.
#[pyfunction]
fn expected_hitting_times<'py>(
    py: Python<'py>,
    m: &PyTransitionMatrix,
    s0: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let profile = pilift::expected_hitting_times(&m.inner, s0).map_err(err)?;
    let dict = PyDict::new(py);
    dict.set_item("target", profile.target)?;
    dict.set_item("hit", profile.hit)?;
    dict.set_item("return_time", profile.return_time)?;
    Ok(dict)
}

/// Expected first return time to `s0`.
#[pyfunction]
fn expected_return_time(m: &PyTransitionMatrix, s0: usize) -> PyResult<f64> {
    pilift::expected_return_time(&m.inner, s0).map_err(err)
}

/// Per-row derivatives of the return time for mass moved donor -> target.
#[pyfunction]
fn sensitivity_direct(m: &PyTransitionMatrix, target: usize, donor: usize) -> PyResult<Vec<f64>> {
    let spec = CouplingSpec::new(target, donor).map_err(err)?;
    Ok(pilift::coupled_derivative_direct(&m.inner, spec).map_err(err)?.d_mu)
}

/// Truncated forward-iteration version of `sensitivity_direct`.
#[pyfunction]
fn sensitivity_series(
    m: &PyTransitionMatrix,
    target: usize,
    donor: usize,
    terms: usize,
) -> PyResult<Vec<f64>> {
    let spec = CouplingSpec::new(target, donor).map_err(err)?;
    Ok(pilift::coupled_derivative_series(&m.inner, spec, terms).map_err(err)?.d_mu)
}

/// Central-difference check of one row's sensitivity.
#[pyfunction]
#[pyo3(signature = (m, target, donor, row, h=1e-6))]
fn finite_difference_check(
    m: &PyTransitionMatrix,
    target: usize,
    donor: usize,
    row: usize,
    h: f64,
) -> PyResult<f64> {
    let spec = CouplingSpec::new(target, donor).map_err(err)?;
    pilift::finite_difference_check(&m.inner, spec, row, h).map_err(err)
}

/// Apply the elementary perturbation p(i, target) += c[i], p(i, donor) -= c[i].
#[pyfunction]
fn apply_elementary(
    m: &PyTransitionMatrix,
    target: usize,
    donor: usize,
    c: Vec<f64>,
) -> PyResult<PyTransitionMatrix> {
    let pert = ElementaryPerturbation::new(CouplingSpec::new(target, donor).map_err(err)?, c);
    Ok(wrap(pilift::apply_elementary(&m.inner, &pert).map_err(err)?))
}

/// Check the monotone-perturbation conditions for target `s0`.
#[pyfunction]
fn check_theorem_conditions<'py>(
    py: Python<'py>,
    p: &PyTransitionMatrix,
    p_prime: &PyTransitionMatrix,
    s0: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let report = pilift::check_theorem_conditions(&p.inner, &p_prime.inner, s0).map_err(err)?;
    let dict = PyDict::new(py);
    dict.set_item("holds", report.holds)?;
    dict.set_item("strict", report.strict)?;
    dict.set_item("strict_rows", report.strict_rows)?;
    let violations = PyList::empty(py);
    for v in &report.violations {
        let item = PyDict::new(py);
        item.set_item("row", v.row)?;
        item.set_item("col", v.col)?;
        item.set_item("p", v.p)?;
        item.set_item("p_prime", v.p_prime)?;
        violations.append(item)?;
    }
    dict.set_item("violations", violations)?;
    Ok(dict)
}

/// Decompose a compliant pair into elementary moves (one per donor column).
#[pyfunction]
fn decompose<'py>(
    py: Python<'py>,
    p: &PyTransitionMatrix,
    p_prime: &PyTransitionMatrix,
    s0: usize,
) -> PyResult<Bound<'py, PyList>> {
    let moves = pilift::decompose(&p.inner, &p_prime.inner, s0).map_err(err)?;
    let list = PyList::empty(py);
    for mv in &moves {
        let item = PyDict::new(py);
        item.set_item("target", mv.coupling.target)?;
        item.set_item("donor", mv.coupling.donor)?;
        item.set_item("c", mv.c.clone())?;
        list.append(item)?;
    }
    Ok(list)
}

/// Monte Carlo estimate of the expected return time.
#[pyfunction]
fn simulate_return_time<'py>(
    py: Python<'py>,
    m: &PyTransitionMatrix,
    s0: usize,
    trajectories: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let e = pilift::simulate_return_time(&m.inner, s0, trajectories, seed).map_err(err)?;
    estimate_dict(py, &e)
}

/// Monte Carlo estimate of the expected hitting time from `start` to `s0`.
#[pyfunction]
fn simulate_hitting_time<'py>(
    py: Python<'py>,
    m: &PyTransitionMatrix,
    start: usize,
    s0: usize,
    trajectories: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let e = pilift::simulate_hitting_time(&m.inner, start, s0, trajectories, seed).map_err(err)?;
    estimate_dict(py, &e)
}

/// Long-run state frequencies over one trajectory.
#[pyfunction]
fn simulate_occupancy(m: &PyTransitionMatrix, steps: u64, seed: u64) -> PyResult<Vec<f64>> {
    pilift::simulate_occupancy(&m.inner, steps, seed).map_err(err)
}

/// Generate a random chain with all entries at least `min_entry`.
#[pyfunction]
fn random_ergodic_chain(n: usize, min_entry: f64, seed: u64) -> PyResult<PyTransitionMatrix> {
    let mut rng = SplitMix64::new(seed);
    Ok(wrap(pilift::random_ergodic_chain(n, min_entry, &mut rng).map_err(err)?))
}

/// Run the randomized verification suite and return its report.
#[pyfunction]
#[pyo3(signature = (trials, n_min=2, n_max=8, min_entry=0.01, seed=42, strictness=1e-12))]
fn run_verification<'py>(
    py: Python<'py>,
    trials: u64,
    n_min: usize,
    n_max: usize,
    min_entry: f64,
    seed: u64,
    strictness: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let config = TrialConfig {
        trials,
        n_min,
        n_max,
        min_entry,
        seed,
        strictness_tolerance: strictness,
    };
    let report = pilift::run_suite(&config).map_err(err)?;
    let dict = PyDict::new(py);
    dict.set_item("pass", report.pass)?;
    dict.set_item("trials", report.trials_run)?;
    dict.set_item("min_gap", report.min_gap)?;
    let failures = PyList::empty(py);
    for f in &report.failures {
        let item = PyDict::new(py);
        item.set_item("trial", f.trial)?;
        item.set_item("n", f.n)?;
        item.set_item("s0", f.s0)?;
        item.set_item("donor", f.donor)?;
        item.set_item("property", f.property.clone())?;
        item.set_item("observed", f.observed.clone())?;
        failures.append(item)?;
    }
    dict.set_item("failures", failures)?;
    Ok(dict)
}

#[pymodule]
fn pilift_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTransitionMatrix>()?;
    m.add_function(wrap_pyfunction!(stationary_linear, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_power, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_via_return_time, m)?)?;
    m.add_function(wrap_pyfunction!(expected_hitting_times, m)?)?;
    m.add_function(wrap_pyfunction!(expected_return_time, m)?)?;
    m.add_function(wrap_pyfunction!(sensitivity_direct, m)?)?;
    m.add_function(wrap_pyfunction!(sensitivity_series, m)?)?;
    m.add_function(wrap_pyfunction!(finite_difference_check, m)?)?;
    m.add_function(wrap_pyfunction!(apply_elementary, m)?)?;
    m.add_function(wrap_pyfunction!(check_theorem_conditions, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_return_time, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_hitting_time, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_occupancy, m)?)?;
    m.add_function(wrap_pyfunction!(random_ergodic_chain, m)?)?;
    m.add_function(wrap_pyfunction!(run_verification, m)?)?;
    Ok(())
}
