//! Python bindings: `import balancelab_py`.

use std::path::PathBuf;

use balancelab::balance::{self, BalanceResult};
use balancelab::dependence::{self, KernelSpec, TauSnapshot};
use balancelab::ensembles::{self, CliqueModelSpec, FitReport};
use balancelab::pipeline::{self, PipelineConfig};
use balancelab::transition::{self, BreakConfig, DcsMode};
use balancelab::tvregress;
use balancelab::wssn::{self, SignedAdjacency};
use balancelab::{Error, ErrorKind};
use chrono::NaiveDate;
use nalgebra::DMatrix;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e.kind() {
        ErrorKind::Numerical => PyArithmeticError::new_err(e.to_string()),
        ErrorKind::Config | ErrorKind::Data => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn spec(bandwidth_h: f64, normalize: bool) -> PyResult<KernelSpec> {
    let mut spec = KernelSpec::new(bandwidth_h).map_err(py_err)?;
    spec.normalize_weights = normalize;
    Ok(spec)
}

/// Weighted signed network.
#[pyclass(name = "SignedNetwork", module = "balancelab_py", skip_from_py_object)]
#[derive(Clone)]
struct PySignedNetwork {
    inner: SignedAdjacency,
}

#[pymethods]
impl PySignedNetwork {
    #[new]
    fn new(adjacency: Vec<Vec<f64>>) -> PyResult<Self> {
        let inner = SignedAdjacency::unnamed(matrix(&adjacency)?).map_err(py_err)?;
        Ok(PySignedNetwork { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m_pos(&self) -> usize {
        self.inner.m_pos
    }

    #[getter]
    fn m_neg(&self) -> usize {
        self.inner.m_neg
    }

    #[getter]
    fn tickers(&self) -> Vec<String> {
        self.inner.tickers.clone()
    }

    #[getter]
    fn date(&self) -> String {
        self.inner.date.to_string()
    }

    fn adjacency(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.a)
    }

    /// `(i, j, weight)` for every edge with `i < j`.
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.edges().collect()
    }

    #[pyo3(signature = (beta_rel = 1.0))]
    fn balance<'py>(&self, py: Python<'py>, beta_rel: f64) -> PyResult<Bound<'py, PyDict>> {
        let r = balance::balance_k(&self.inner, beta_rel).map_err(py_err)?;
        balance_dict(py, &r)
    }

    fn is_balanced(&self) -> PyResult<bool> {
        balance::is_balanced(&self.inner).map_err(py_err)
    }

    fn is_balanced_exhaustive(&self) -> PyResult<bool> {
        balance::is_balanced_exhaustive(&self.inner).map_err(py_err)
    }

    /// `(positive, negative)` degree of every node.
    fn degrees(&self) -> Vec<(usize, usize)> {
        wssn::signed_degrees(&self.inner)
            .iter()
            .map(|d| (d.pos, d.neg))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "SignedNetwork(n={}, m_pos={}, m_neg={})",
            self.inner.n(),
            self.inner.m_pos,
            self.inner.m_neg
        )
    }
}

fn balance_dict<'py>(py: Python<'py>, r: &BalanceResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("K", r.k)?;
    d.set_item("beta_rel", r.beta_rel)?;
    d.set_item("trace_signed", r.trace_signed)?;
    d.set_item("trace_unsigned", r.trace_unsigned)?;
    d.set_item("is_balanced", r.is_balanced)?;
    d.set_item("m_pos", r.m_pos)?;
    d.set_item("m_neg", r.m_neg)?;
    Ok(d)
}

fn fit_dict<'py>(py: Python<'py>, r: &FitReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("s_opt", r.s_opt)?;
    d.set_item("rmse_by_s", r.rmse_by_s.clone())?;
    d.set_item("rmse_sd_by_s", r.rmse_sd_by_s.clone())?;
    d.set_item("rmse_random", r.rmse_random)?;
    d.set_item("rmse_random_sd", r.rmse_random_sd)?;
    d.set_item("trials", r.trials)?;
    d.set_item("infeasible", r.infeasible.clone())?;
    Ok(d)
}

#[pyfunction]
fn fnc_balance(s: usize, beta_rel: f64) -> PyResult<f64> {
    balance::fnc_balance(s, beta_rel).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (ya, yb, t, bandwidth_h, normalize_weights = true))]
fn tv_kendall(
    ya: Vec<f64>,
    yb: Vec<f64>,
    t: usize,
    bandwidth_h: f64,
    normalize_weights: bool,
) -> PyResult<f64> {
    dependence::tv_kendall(&ya, &yb, &spec(bandwidth_h, normalize_weights)?, t).map_err(py_err)
}

#[pyfunction]
fn classical_kendall(ya: Vec<f64>, yb: Vec<f64>) -> PyResult<f64> {
    dependence::classical_kendall(&ya, &yb).map_err(py_err)
}

#[pyfunction]
fn tau_to_rho_gaussian(tau: f64) -> PyResult<f64> {
    tvregress::tau_to_rho_gaussian(tau).map_err(py_err)
}

#[pyfunction]
fn tv_slope(yi: Vec<f64>, yj: Vec<f64>, t: usize, bandwidth_h: f64) -> PyResult<f64> {
    tvregress::tv_slope(&yi, &yj, &spec(bandwidth_h, true)?, t).map_err(py_err)
}

/// Thresholds a symmetric tau matrix at `|tau| >= epsilon`.
#[pyfunction]
fn build_wssn(tau: Vec<Vec<f64>>, epsilon: f64) -> PyResult<PySignedNetwork> {
    let tau = matrix(&tau)?;
    let snapshot = TauSnapshot {
        date: NaiveDate::default(),
        tickers: (0..tau.nrows()).map(|i| format!("n{i}")).collect(),
        tau,
    };
    let inner = wssn::build_wssn(&snapshot, epsilon).map_err(py_err)?;
    Ok(PySignedNetwork { inner })
}

#[pyfunction]
fn gen_quasi_csg(
    n: usize,
    m_neg: usize,
    m_pos: usize,
    s: usize,
    seed: u64,
) -> PyResult<PySignedNetwork> {
    let inner = ensembles::gen_quasi_csg(&CliqueModelSpec {
        n,
        m_neg,
        m_pos,
        s,
        seed,
    })
    .map_err(py_err)?;
    Ok(PySignedNetwork { inner })
}

#[pyfunction]
fn gen_signed_er(n: usize, m_neg: usize, m_pos: usize, seed: u64) -> PyResult<PySignedNetwork> {
    let inner = ensembles::gen_signed_er(n, m_neg, m_pos, seed).map_err(py_err)?;
    Ok(PySignedNetwork { inner })
}

#[pyfunction]
fn spectral_rmse(target: &PySignedNetwork, model: &PySignedNetwork) -> PyResult<f64> {
    ensembles::spectral_rmse(&target.inner, &model.inner).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (target, s_min, s_max, trials = 10, seed = 1))]
fn fit_clique_size<'py>(
    py: Python<'py>,
    target: &PySignedNetwork,
    s_min: usize,
    s_max: usize,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let report =
        ensembles::fit_clique_size(&target.inner, s_min..=s_max, trials, seed).map_err(py_err)?;
    fit_dict(py, &report)
}

#[pyfunction]
#[pyo3(signature = (k, mode = "mean"))]
fn dcs(k: Vec<f64>, mode: &str) -> PyResult<Vec<f64>> {
    let mode: DcsMode = mode.parse().map_err(py_err)?;
    transition::dcs_values(&k, mode).map_err(py_err)
}

/// Break search on a balance series indexed `0..len(k)`.
#[pyfunction]
#[pyo3(signature = (k, min_segment = 26, gain_threshold = 0.85, mode = "mean"))]
fn detect_break<'py>(
    py: Python<'py>,
    k: Vec<f64>,
    min_segment: usize,
    gain_threshold: f64,
    mode: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let config = BreakConfig {
        min_segment,
        gain_threshold,
        mode: mode.parse().map_err(py_err)?,
    };
    let start = NaiveDate::default();
    let dates: Vec<NaiveDate> = (0..k.len() as u64)
        .map(|i| start + chrono::Days::new(i))
        .collect();
    let r = transition::detect_break(&dates, &k, &config).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("break_index", r.break_index)?;
    d.set_item("slope_before", r.slope_before)?;
    d.set_item("slope_after", r.slope_after)?;
    d.set_item("sse_gain", r.sse_gain)?;
    d.set_item("detected", r.detected)?;
    d.set_item("dcs", r.dcs)?;
    Ok(d)
}

/// Runs every stage from a JSON config file and returns the report path.
#[pyfunction]
#[pyo3(signature = (config, out = None))]
fn run_pipeline(config: PathBuf, out: Option<PathBuf>) -> PyResult<String> {
    let mut cfg = PipelineConfig::from_file(&config).map_err(py_err)?;
    if let Some(out) = out {
        cfg.out = out;
    }
    pipeline::run_pipeline(&cfg).map_err(py_err)?;
    Ok(cfg.out.join(pipeline::REPORT).display().to_string())
}

#[pymodule]
fn balancelab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySignedNetwork>()?;
    m.add_function(wrap_pyfunction!(fnc_balance, m)?)?;
    m.add_function(wrap_pyfunction!(tv_kendall, m)?)?;
    m.add_function(wrap_pyfunction!(classical_kendall, m)?)?;
    m.add_function(wrap_pyfunction!(tau_to_rho_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(tv_slope, m)?)?;
    m.add_function(wrap_pyfunction!(build_wssn, m)?)?;
    m.add_function(wrap_pyfunction!(gen_quasi_csg, m)?)?;
    m.add_function(wrap_pyfunction!(gen_signed_er, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_rmse, m)?)?;
    m.add_function(wrap_pyfunction!(fit_clique_size, m)?)?;
    m.add_function(wrap_pyfunction!(dcs, m)?)?;
    m.add_function(wrap_pyfunction!(detect_break, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
