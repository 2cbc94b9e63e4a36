//! Python bindings for the `betolo` crate.

use betolo::experiments::{
    ctw_engine, kt_engine, run_experiment, synthesize_sequence, ExperimentConfig, QuantizedCtwOlo, SyntheticKind,
};
use betolo::{Error, KtOlo, RegretBoundInputs, VerifyOptions};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(msg) => PyIOError::new_err(msg),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// ln ψ_t(x) of the KT potential.
#[pyfunction]
fn log_kt_potential(t: u64, x: f64) -> PyResult<f64> {
    betolo::log_kt_potential(t, x).map(|p| p.value()).map_err(to_py)
}

/// Signed KT bet fraction after `t` rounds with sum `x`.
#[pyfunction]
fn kt_bet_fraction(t: u64, x: f64) -> PyResult<f64> {
    betolo::kt_bet_fraction(t, x).map(|b| b.value()).map_err(to_py)
}

/// Principal branch of the Lambert W function.
#[pyfunction]
fn lambert_w(x: f64) -> PyResult<f64> {
    betolo::lambert_w(x).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (horizon, competitor_norm, initial_wealth = 1.0))]
fn kt_regret_bound(horizon: u64, competitor_norm: f64, initial_wealth: f64) -> PyResult<f64> {
    betolo::kt_regret_bound(&RegretBoundInputs::new(horizon, competitor_norm, initial_wealth)).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (horizon, competitor_norm, initial_wealth = 1.0))]
fn kt_exact_dual_bound(horizon: u64, competitor_norm: f64, initial_wealth: f64) -> PyResult<f64> {
    betolo::kt_exact_dual_bound(horizon, competitor_norm, initial_wealth).map_err(to_py)
}

/// Vectorial KT coin-betting OLO.
#[pyclass(name = "KtOlo")]
struct PyKtOlo(KtOlo);

#[pymethods]
impl PyKtOlo {
    #[new]
    #[pyo3(signature = (dim, initial_wealth = 1.0))]
    fn new(dim: usize, initial_wealth: f64) -> PyResult<Self> {
        kt_engine(dim, initial_wealth).map(PyKtOlo).map_err(to_py)
    }

    fn action(&mut self) -> Vec<f64> {
        self.0.action()
    }

    /// Feeds the round's gradient and returns the round's reward.
    fn update(&mut self, g: Vec<f64>) -> PyResult<f64> {
        self.0.update(&g).map_err(to_py)
    }

    #[getter]
    fn wealth(&self) -> f64 {
        self.0.wealth()
    }

    #[getter]
    fn log_wealth(&self) -> f64 {
        self.0.log_wealth()
    }

    #[getter]
    fn log_potential(&self) -> f64 {
        self.0.log_potential()
    }
}

/// CTW OLO whose side information is the sign of one gradient coordinate.
#[pyclass(name = "CtwOlo")]
struct PyCtwOlo(QuantizedCtwOlo);

#[pymethods]
impl PyCtwOlo {
    #[new]
    #[pyo3(signature = (dim, depth, axis = 0, initial_wealth = 1.0))]
    fn new(dim: usize, depth: usize, axis: usize, initial_wealth: f64) -> PyResult<Self> {
        ctw_engine(dim, depth, axis, initial_wealth).map(PyCtwOlo).map_err(to_py)
    }

    fn action(&mut self) -> Vec<f64> {
        self.0.action()
    }

    fn update(&mut self, g: Vec<f64>) -> PyResult<f64> {
        self.0.update(&g).map_err(to_py)
    }

    #[getter]
    fn wealth(&self) -> f64 {
        self.0.wealth()
    }

    #[getter]
    fn log_wealth(&self) -> f64 {
        self.0.log_wealth()
    }

    #[getter]
    fn log_potential(&self) -> f64 {
        self.0.log_potential()
    }

    /// Tree nodes read or written in the last round.
    #[getter]
    fn round_touches(&self) -> u64 {
        self.0.bettor().inner().round_touches()
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.0.bettor().inner().tree().node_count()
    }
}

/// Runs the verification suites and returns `(name, passed, max_error, detail)` tuples.
#[pyfunction]
#[pyo3(signature = (depth = 4, seed = 0))]
fn verify(depth: usize, seed: u64) -> PyResult<Vec<(String, bool, f64, String)>> {
    let suites = betolo::run_all(&VerifyOptions {
        depth,
        seed,
        inject_fault: false,
    })
    .map_err(to_py)?;
    Ok(suites
        .into_iter()
        .map(|s| (s.name.to_string(), s.passed, s.max_error, s.detail))
        .collect())
}

/// Markov sign sequence `g_t = r_t g` of the given order and flip probability.
#[pyfunction]
#[pyo3(signature = (g, rounds, order = 1, flip = 0.9, seed = 0))]
fn markov_gradients(g: Vec<f64>, rounds: usize, order: usize, flip: f64, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    synthesize_sequence(&SyntheticKind::Markov { g, order, flip }, rounds, seed).map_err(to_py)
}

/// Runs an experiment config given as text and returns a dict from config id
/// to the cumulative-loss curve.
#[pyfunction]
#[pyo3(signature = (config, seed = None))]
fn run_config<'py>(py: Python<'py>, config: &str, seed: Option<u64>) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = ExperimentConfig::parse(config).map_err(to_py)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let report = py.detach(|| run_experiment(&cfg, false)).map_err(to_py)?;
    let out = PyDict::new(py);
    for r in report.results {
        let curve: Vec<f64> = r.rows.iter().map(|row| row.cum_loss).collect();
        out.set_item(r.config_id, curve)?;
    }
    Ok(out)
}

#[pymodule]
#[pyo3(name = "betolo")]
fn betolo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(log_kt_potential, m)?)?;
    m.add_function(wrap_pyfunction!(kt_bet_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(lambert_w, m)?)?;
    m.add_function(wrap_pyfunction!(kt_regret_bound, m)?)?;
    m.add_function(wrap_pyfunction!(kt_exact_dual_bound, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(markov_gradients, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_class::<PyKtOlo>()?;
    m.add_class::<PyCtwOlo>()?;
    Ok(())
}
