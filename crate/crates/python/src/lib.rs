//! Python bindings: channel/symbol generation, the six solvers and the SER
//! Monte-Carlo loop, exposed as plain functions plus a small result class.
//!
//! Build with `cargo build -p ceprecode-python --release`; the smoke test in
//! `python/smoke_test.py` shows how to load the resulting cdylib.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ceprecode::config::parse_config;
use ceprecode::error::Error;
use ceprecode::objective::{evaluate_objective_precoder, rotate_channel, SymbolVector};
use ceprecode::sim::{
    self, draw_symbols, generate_channel, ChannelMatrix, SolverSettings, SolverTag,
};
use ceprecode::solver::{flop_model, FlopStage};

fn to_py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn channel_from_rows(rows: Vec<Vec<Complex64>>) -> PyResult<ChannelMatrix> {
    let n = rows.len();
    let m = rows.first().map(|r| r.len()).unwrap_or(0);
    if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("channel must be a rectangular N×M nested list"));
    }
    let mut data = ndarray::Array2::zeros((n, m));
    for (i, row) in rows.iter().enumerate() {
        for (j, &z) in row.iter().enumerate() {
            data[[i, j]] = z;
        }
    }
    ChannelMatrix::new(data).map_err(to_py_err)
}

/// Result of one solver run.
#[pyclass]
struct SolveResult {
    #[pyo3(get)]
    x: Vec<Complex64>,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    stalled: bool,
    #[pyo3(get)]
    exact_objective: f64,
    #[pyo3(get)]
    smoothed_objective: f64,
    #[pyo3(get)]
    ci_feasible: bool,
    #[pyo3(get)]
    flops_estimate: u64,
    #[pyo3(get)]
    wall_time_s: f64,
    #[pyo3(get)]
    objective_trace: Vec<f64>,
}

#[pymethods]
impl SolveResult {
    fn __repr__(&self) -> String {
        format!(
            "SolveResult(iterations={}, converged={}, exact_objective={:.6}, ci_feasible={})",
            self.iterations, self.converged, self.exact_objective, self.ci_feasible
        )
    }
}

/// Aggregate of a SER Monte-Carlo run.
#[pyclass]
struct SerResult {
    #[pyo3(get)]
    slots: u64,
    #[pyo3(get)]
    symbols_sent: u64,
    #[pyo3(get)]
    symbol_errors: u64,
    #[pyo3(get)]
    ser: f64,
    #[pyo3(get)]
    ci_feasible_fraction: f64,
    #[pyo3(get)]
    mean_iterations: f64,
}

#[pymethods]
impl SerResult {
    fn __repr__(&self) -> String {
        format!(
            "SerResult(ser={:.4e}, errors={}, symbols={})",
            self.ser, self.symbol_errors, self.symbols_sent
        )
    }
}

/// i.i.d. CN(0,1) channel as an N×M nested list (rows = antennas).
#[pyfunction]
fn channel(n: usize, m: usize, seed: u64) -> PyResult<Vec<Vec<Complex64>>> {
    let h = generate_channel(n, m, seed).map_err(to_py_err)?;
    Ok((0..n)
        .map(|i| (0..m).map(|j| h.data()[[i, j]]).collect())
        .collect())
}

/// Uniform L-PSK constellation indices for M users.
#[pyfunction]
fn symbols(m: usize, l: usize, u: f64, seed: u64) -> PyResult<Vec<usize>> {
    let s = draw_symbols(m, l, u, seed).map_err(to_py_err)?;
    Ok(s.indices().to_vec())
}

/// Solve one precoding instance.
///
/// `tag` is one of rcg-ci, relaxed-ci (alias cvx-ci), ceo-ci, rcg-ir, gd-ir,
/// ceo-ir. `symbol_indices` are constellation indices in 0..l.
#[pyfunction]
#[pyo3(signature = (tag, channel_rows, symbol_indices, l=4, u=1.0, power_budget=1.0, seed=0, ceo_iterations=None, ceo_samples=None))]
#[allow(clippy::too_many_arguments)]
fn solve(
    tag: &str,
    channel_rows: Vec<Vec<Complex64>>,
    symbol_indices: Vec<usize>,
    l: usize,
    u: f64,
    power_budget: f64,
    seed: u64,
    ceo_iterations: Option<usize>,
    ceo_samples: Option<usize>,
) -> PyResult<SolveResult> {
    let tag = SolverTag::parse(tag).map_err(to_py_err)?;
    let h = channel_from_rows(channel_rows)?;
    let s = SymbolVector::from_indices(symbol_indices, l, u).map_err(to_py_err)?;
    let mut settings = SolverSettings::default();
    if let Some(t) = ceo_iterations {
        settings.ceo.iterations = t;
    }
    if let Some(k) = ceo_samples {
        settings.ceo.samples = k;
    }
    let report = sim::solve_with_tag(tag, &h, &s, power_budget, &settings, seed).map_err(to_py_err)?;
    let ch = rotate_channel(&h, &s, power_budget).map_err(to_py_err)?;
    let eval = evaluate_objective_precoder(&report.x, &ch, 0.01 * u * s.beta()).map_err(to_py_err)?;
    Ok(SolveResult {
        x: report.x,
        iterations: report.iterations,
        converged: report.converged,
        stalled: report.stalled,
        exact_objective: eval.exact_value,
        smoothed_objective: eval.smoothed_value,
        ci_feasible: eval.is_ci_feasible(),
        flops_estimate: report.flops_estimate,
        wall_time_s: report.wall_time.as_secs_f64(),
        objective_trace: report.exact_trace,
    })
}

/// SER Monte-Carlo for one solver at one operating point.
#[pyfunction]
#[pyo3(signature = (tag, n, m, l, power_budget, snr_db, n_symbols, seed, ceo_iterations=None, ceo_samples=None))]
#[allow(clippy::too_many_arguments)]
fn run_ser(
    tag: &str,
    n: usize,
    m: usize,
    l: usize,
    power_budget: f64,
    snr_db: f64,
    n_symbols: u64,
    seed: u64,
    ceo_iterations: Option<usize>,
    ceo_samples: Option<usize>,
) -> PyResult<SerResult> {
    let tag = SolverTag::parse(tag).map_err(to_py_err)?;
    let mut settings = SolverSettings::default();
    if let Some(t) = ceo_iterations {
        settings.ceo.iterations = t;
    }
    if let Some(k) = ceo_samples {
        settings.ceo.samples = k;
    }
    let report = sim::run_ser(tag, n, m, l, power_budget, snr_db, n_symbols, seed, &settings)
        .map_err(to_py_err)?;
    Ok(SerResult {
        slots: report.slots,
        symbols_sent: report.symbols_sent,
        symbol_errors: report.symbol_errors,
        ser: report.ser(),
        ci_feasible_fraction: report.ci_feasible_fraction(),
        mean_iterations: report.mean_iterations,
    })
}

/// Per-iteration flop counts of the RCG-CI solver; `stage` is
/// gradient-stage, direction-stage or full-iteration.
#[pyfunction]
fn flops(n: usize, m: usize, stage: &str) -> PyResult<u64> {
    let stage: FlopStage = stage.parse().map_err(to_py_err)?;
    flop_model(n, m, stage).map_err(to_py_err)
}

/// Validate a config file's text and return its canonical rendering.
#[pyfunction]
fn check_config(text: &str) -> PyResult<String> {
    let spec = parse_config(text).map_err(to_py_err)?;
    Ok(ceprecode::config::render(&spec))
}

#[pymodule]
fn ceprecode_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", ceprecode::VERSION)?;
    m.add_class::<SolveResult>()?;
    m.add_class::<SerResult>()?;
    m.add_function(wrap_pyfunction!(channel, m)?)?;
    m.add_function(wrap_pyfunction!(symbols, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_ser, m)?)?;
    m.add_function(wrap_pyfunction!(flops, m)?)?;
    m.add_function(wrap_pyfunction!(check_config, m)?)?;
    Ok(())
}
