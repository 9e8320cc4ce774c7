//! Python bindings for `elliptest`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

use elliptest as core;

fn to_py(err: core::Error) -> PyErr {
    match err {
        core::Error::Domain(_) | core::Error::Input(_) => PyValueError::new_err(err.to_string()),
        core::Error::Io { .. } => PyOSError::new_err(err.to_string()),
        core::Error::Numeric(_) => PyArithmeticError::new_err(err.to_string()),
    }
}

fn family(name: &str, nu: Option<f64>) -> PyResult<core::Family> {
    match (name, nu) {
        ("normal", _) => Ok(core::Family::Normal),
        ("student", Some(nu)) => Ok(core::Family::Student { nu }),
        ("student", None) => Err(PyValueError::new_err("the student family needs nu")),
        (other, _) => Err(PyValueError::new_err(format!("unknown family {other:?}"))),
    }
}

fn parse<T: std::str::FromStr<Err = core::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

#[pyclass(name = "PairCounts", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyPairCounts(core::PairCounts);

#[pymethods]
impl PyPairCounts {
    #[new]
    fn new(k: u64, r: u64, l: u64, m: u64) -> PyResult<Self> {
        core::PairCounts::new(k, r, l, m).map(Self).map_err(to_py)
    }

    #[getter]
    fn k(&self) -> u64 {
        self.0.k
    }
    #[getter]
    fn r(&self) -> u64 {
        self.0.r
    }
    #[getter]
    fn l(&self) -> u64 {
        self.0.l
    }
    #[getter]
    fn m(&self) -> u64 {
        self.0.m
    }

    fn p_value(&self) -> PyResult<f64> {
        core::pair_p_value(&self.0).map_err(to_py)
    }

    fn test(&self, alpha: f64) -> PyResult<PyPairTestResult> {
        core::test_pair(&self.0, alpha).map(PyPairTestResult).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let c = self.0;
        format!("PairCounts(k={}, r={}, l={}, m={})", c.k, c.r, c.l, c.m)
    }
}

#[pyclass(name = "PairTestResult", frozen)]
struct PyPairTestResult(core::PairTestResult);

#[pymethods]
impl PyPairTestResult {
    #[getter]
    fn counts(&self) -> PyPairCounts {
        PyPairCounts(self.0.counts)
    }
    #[getter]
    fn c1(&self) -> i64 {
        self.0.c1
    }
    #[getter]
    fn c2(&self) -> i64 {
        self.0.c2
    }
    #[getter]
    fn p_value(&self) -> f64 {
        self.0.p_value
    }
    #[getter]
    fn rejected(&self) -> bool {
        self.0.rejected
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha
    }

    fn __repr__(&self) -> String {
        let t = &self.0;
        format!(
            "PairTestResult(c1={}, c2={}, p_value={}, rejected={})",
            t.c1,
            t.c2,
            t.p_value,
            if t.rejected { "True" } else { "False" }
        )
    }
}

#[pyclass(name = "MetaResult", frozen)]
struct PyMetaResult(core::MetaResult);

#[pymethods]
impl PyMetaResult {
    #[getter]
    fn n_years(&self) -> u64 {
        self.0.n_years
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha
    }
    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta
    }
    #[getter]
    fn x(&self) -> u64 {
        self.0.x
    }
    #[getter]
    fn c_beta(&self) -> u64 {
        self.0.c_beta
    }
    #[getter]
    fn p_value_inclusive(&self) -> f64 {
        self.0.p_value_inclusive
    }
    #[getter]
    fn p_value_exclusive(&self) -> f64 {
        self.0.p_value_exclusive
    }
    #[getter]
    fn rejected(&self) -> bool {
        self.0.rejected
    }
}

#[pyclass(name = "RejectionGraph", frozen)]
struct PyRejectionGraph(core::RejectionGraph);

#[pymethods]
impl PyRejectionGraph {
    #[new]
    #[pyo3(signature = (edges, tickers=None))]
    fn new(edges: Vec<(usize, usize)>, tickers: Option<Vec<String>>) -> PyResult<Self> {
        core::RejectionGraph::build(&edges, tickers.as_deref())
            .map(Self)
            .map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        core::RejectionGraph::from_json(text).map(Self).map_err(to_py)
    }

    fn vertices(&self) -> Vec<usize> {
        self.0.vertices().collect()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.0.edges().map(|e| (e.low(), e.high())).collect()
    }

    fn degree(&self, v: usize) -> usize {
        self.0.degree(v)
    }

    #[pyo3(signature = (min_degree=1))]
    fn hubs(&self, min_degree: usize) -> Vec<usize> {
        self.0.hubs(min_degree)
    }

    fn to_dot(&self) -> String {
        self.0.to_dot()
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn __len__(&self) -> usize {
        self.0.n_edges()
    }
}

#[pyclass(name = "YearDecision", frozen)]
struct PyYearDecision(core::YearDecision);

#[pymethods]
impl PyYearDecision {
    #[getter]
    fn year(&self) -> i32 {
        self.0.year
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha
    }
    #[getter]
    fn tickers(&self) -> Vec<String> {
        self.0.tickers.clone()
    }
    #[getter]
    fn rejected_h_year(&self) -> bool {
        self.0.rejected_h_year
    }

    fn rejected_pairs(&self) -> Vec<(usize, usize)> {
        self.0.rejected_pairs().into_iter().map(|p| (p.low(), p.high())).collect()
    }

    /// Pair p-values keyed by `(i, j)`.
    fn p_values(&self) -> BTreeMap<(usize, usize), f64> {
        self.0
            .pairs
            .iter()
            .map(|r| ((r.pair.low(), r.pair.high()), r.test.p_value))
            .collect()
    }

    fn graph(&self) -> PyRejectionGraph {
        PyRejectionGraph(self.0.graph.clone())
    }
}

#[pyfunction]
fn log_choose(n: u64, k: u64) -> PyResult<f64> {
    core::log_choose(n, k).map_err(to_py)
}

#[pyfunction]
fn hypergeom_pmf(r: u64, m: u64, t: u64, i: i64) -> PyResult<f64> {
    core::hypergeom_pmf(r, m, t, i).map(|p| p.value()).map_err(to_py)
}

#[pyfunction]
fn hypergeom_left_tail(r: u64, m: u64, t: u64, c: i64) -> PyResult<f64> {
    core::hypergeom_left_tail(r, m, t, c).map(|p| p.value()).map_err(to_py)
}

#[pyfunction]
fn hypergeom_right_tail(r: u64, m: u64, t: u64, c: i64) -> PyResult<f64> {
    core::hypergeom_right_tail(r, m, t, c).map(|p| p.value()).map_err(to_py)
}

#[pyfunction]
fn binom_tail(n: u64, p: f64, c: i64) -> PyResult<f64> {
    core::binom_tail(n, p, c).map(|t| t.value()).map_err(to_py)
}

/// `(k, r)` concordance counts over disjoint consecutive pairs.
#[pyfunction]
fn tau_hat(xi: Vec<f64>, xj: Vec<f64>) -> PyResult<(u64, u64)> {
    core::tau_hat(&xi, &xj).map_err(to_py)
}

/// `(l, m)` same-side-of-mean counts.
#[pyfunction]
fn q_hat(xi: Vec<f64>, xj: Vec<f64>) -> PyResult<(u64, u64)> {
    core::q_hat(&xi, &xj).map_err(to_py)
}

#[pyfunction]
fn conditional_thresholds(r: u64, m: u64, t: u64, alpha: f64) -> PyResult<(i64, i64)> {
    core::conditional_thresholds(r, m, t, alpha).map_err(to_py)
}

#[pyfunction]
fn test_pair(k: u64, r: u64, l: u64, m: u64, alpha: f64) -> PyResult<PyPairTestResult> {
    PyPairCounts::new(k, r, l, m)?.test(alpha)
}

/// Holm step-down over a `{name: p_value}` mapping. Returns
/// `(rejected, accepted)` with names in processing order.
#[pyfunction]
fn holm(p_values: BTreeMap<String, f64>, alpha: f64) -> PyResult<(Vec<String>, Vec<String>)> {
    let out = core::holm(&p_values, alpha).map_err(to_py)?;
    Ok((out.rejected, out.accepted))
}

#[pyfunction]
fn meta_threshold(n_years: u64, alpha: f64, beta: f64) -> PyResult<u64> {
    core::meta_threshold(n_years, alpha, beta).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (x, n_years, alpha, mode="inclusive"))]
fn meta_p_value(x: u64, n_years: u64, alpha: f64, mode: &str) -> PyResult<f64> {
    core::meta_p_value(x, n_years, alpha, parse(mode)?).map_err(to_py)
}

#[pyfunction]
fn meta_test(x: u64, n_years: u64, alpha: f64, beta: f64) -> PyResult<PyMetaResult> {
    core::meta_test(x, n_years, alpha, beta).map(PyMetaResult).map_err(to_py)
}

#[pyfunction]
fn orthant_prob(lambda_ii: f64, lambda_jj: f64, lambda_ij: f64) -> PyResult<f64> {
    core::orthant_prob(lambda_ii, lambda_jj, lambda_ij).map_err(to_py)
}

/// Draws `n_obs` rows from a centered elliptical law; returns a list of rows.
#[pyfunction]
#[pyo3(signature = (scatter, n_obs, seed, family="normal", nu=None))]
fn sample_ecd(scatter: Vec<Vec<f64>>, n_obs: usize, seed: u64, family: &str, nu: Option<f64>) -> PyResult<Vec<Vec<f64>>> {
    let p = scatter.len();
    let spec = core::EllipticalSpec::new(self::family(family, nu)?, vec![0.0; p], scatter).map_err(to_py)?;
    let x = core::sample_ecd(&spec, n_obs, seed).map_err(to_py)?;
    Ok((0..n_obs).map(|t| (0..p).map(|j| x[(t, j)]).collect()).collect())
}

/// Rejection rate and standard error of the pair test on a bivariate law.
#[pyfunction]
#[pyo3(signature = (rho, n, m, alpha, reps, seed, family="normal", nu=None))]
#[allow(clippy::too_many_arguments)]
fn mc_size(rho: f64, n: usize, m: usize, alpha: f64, reps: u64, seed: u64, family: &str, nu: Option<f64>) -> PyResult<(f64, f64)> {
    let spec = core::EllipticalSpec::bivariate(self::family(family, nu)?, rho).map_err(to_py)?;
    let est = core::mc_size_power(&core::Law::Elliptical(spec), n, m, alpha, reps, seed).map_err(to_py)?;
    Ok((est.rate, est.se))
}

/// Runs the one-year procedure on a wide CSV panel.
#[pyfunction]
#[pyo3(signature = (path, n=125, m=125, alpha=0.05, format="returns"))]
fn run_year(path: PathBuf, n: usize, m: usize, alpha: f64, format: &str) -> PyResult<PyYearDecision> {
    let loaded = core::load_panel(&path, parse(format)?).map_err(to_py)?;
    core::run_year(&loaded.panel, n, m, alpha)
        .map(PyYearDecision)
        .map_err(to_py)
}

#[pymodule]
fn elliptest_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPairCounts>()?;
    m.add_class::<PyPairTestResult>()?;
    m.add_class::<PyMetaResult>()?;
    m.add_class::<PyRejectionGraph>()?;
    m.add_class::<PyYearDecision>()?;
    m.add_function(wrap_pyfunction!(log_choose, m)?)?;
    m.add_function(wrap_pyfunction!(hypergeom_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(hypergeom_left_tail, m)?)?;
    m.add_function(wrap_pyfunction!(hypergeom_right_tail, m)?)?;
    m.add_function(wrap_pyfunction!(binom_tail, m)?)?;
    m.add_function(wrap_pyfunction!(tau_hat, m)?)?;
    m.add_function(wrap_pyfunction!(q_hat, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(test_pair, m)?)?;
    m.add_function(wrap_pyfunction!(holm, m)?)?;
    m.add_function(wrap_pyfunction!(meta_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(meta_p_value, m)?)?;
    m.add_function(wrap_pyfunction!(meta_test, m)?)?;
    m.add_function(wrap_pyfunction!(orthant_prob, m)?)?;
    m.add_function(wrap_pyfunction!(sample_ecd, m)?)?;
    m.add_function(wrap_pyfunction!(mc_size, m)?)?;
    m.add_function(wrap_pyfunction!(run_year, m)?)?;
    Ok(())
}
