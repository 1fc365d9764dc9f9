//! Python bindings for `robust_risk`.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ::robust_risk::cli::{self, RunConfig, SimConfig};
use ::robust_risk::distributions::{self as dist, DistSpec};
use ::robust_risk::empirical::Sample;
use ::robust_risk::garch::{self, GarchParams, ModelSpec};
use ::robust_risk::riskmeasures;
use ::robust_risk::robust::{self, LossKind};
use ::robust_risk::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Data(_) => PyIOError::new_err(e.to_string()),
        Error::Numerical(_) | Error::Infeasible(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for ::robust_risk::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn sample(values: Vec<f64>) -> PyResult<Sample> {
    Sample::new(values).py()
}

/// A risk functional: EL, MSD(beta), ES(alpha), EVaR(alpha), ML or VaR(alpha).
#[pyclass(frozen, name = "RiskMeasure", from_py_object)]
#[derive(Clone, Copy)]
struct PyRiskMeasure(riskmeasures::RiskMeasure);

#[pymethods]
impl PyRiskMeasure {
    /// Parse a name such as "EL", "MSD(1)", "ES(0.025)".
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        let m: riskmeasures::RiskMeasure = name.parse().py()?;
        m.validate().py()?;
        Ok(Self(m))
    }

    #[staticmethod]
    fn el() -> Self {
        Self(riskmeasures::RiskMeasure::El)
    }

    #[staticmethod]
    fn ml() -> Self {
        Self(riskmeasures::RiskMeasure::Ml)
    }

    #[staticmethod]
    fn msd(beta: f64) -> PyResult<Self> {
        Self::checked(riskmeasures::RiskMeasure::Msd { beta })
    }

    #[staticmethod]
    fn es(alpha: f64) -> PyResult<Self> {
        Self::checked(riskmeasures::RiskMeasure::Es { alpha })
    }

    #[staticmethod]
    fn evar(alpha: f64) -> PyResult<Self> {
        Self::checked(riskmeasures::RiskMeasure::Evar { alpha })
    }

    #[staticmethod]
    fn var(alpha: f64) -> PyResult<Self> {
        Self::checked(riskmeasures::RiskMeasure::Var { alpha })
    }

    #[getter]
    fn is_coherent(&self) -> bool {
        self.0.is_coherent()
    }

    /// Value of the measure on a sample of outcomes (positive = loss).
    fn value(&self, values: Vec<f64>) -> PyResult<f64> {
        riskmeasures::value(&self.0, &sample(values)?).py()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("RiskMeasure('{}')", self.0)
    }
}

impl PyRiskMeasure {
    fn checked(m: riskmeasures::RiskMeasure) -> PyResult<Self> {
        m.validate().py()?;
        Ok(Self(m))
    }
}

/// Per-unit costs of over- (`g`) and under- (`l`) estimating capital.
#[pyclass(frozen, name = "CostRates", from_py_object)]
#[derive(Clone)]
struct PyCostRates(robust::CostRates);

#[pymethods]
impl PyCostRates {
    #[staticmethod]
    fn constant(g: f64, l: f64) -> PyResult<Self> {
        Ok(Self(robust::CostRates::constant(g, l).py()?))
    }

    /// One (g, l) pair per scenario.
    #[staticmethod]
    fn series(g: Vec<f64>, l: Vec<f64>) -> PyResult<Self> {
        Ok(Self(robust::CostRates::series(g, l).py()?))
    }

    #[getter]
    fn mean_g(&self) -> f64 {
        self.0.mean_g()
    }

    #[getter]
    fn mean_l(&self) -> f64 {
        self.0.mean_l()
    }

    fn __repr__(&self) -> String {
        format!("CostRates(mean_g={}, mean_l={})", self.0.mean_g(), self.0.mean_l())
    }
}

#[pyclass(frozen, name = "RobustResult", skip_from_py_object)]
struct PyRobustResult {
    #[pyo3(get)]
    risk: f64,
    #[pyo3(get)]
    deviation: f64,
    #[pyo3(get)]
    minimizer: f64,
    /// Worst-case probability weights at the minimiser.
    #[pyo3(get)]
    weights: Vec<f64>,
}

#[pymethods]
impl PyRobustResult {
    fn __repr__(&self) -> String {
        format!("RobustResult(risk={}, deviation={})", self.risk, self.deviation)
    }
}

fn kind(name: &str) -> PyResult<LossKind> {
    name.parse().py()
}

/// Robust capital and residual deviation for a sample of returns.
#[pyfunction]
#[pyo3(name = "robust_risk", signature = (values, costs, measure, kind="OURS"))]
fn py_robust_risk(values: Vec<f64>, costs: &PyCostRates, measure: &PyRiskMeasure, kind: &str) -> PyResult<PyRobustResult> {
    let r = robust::robust_risk(self::kind(kind)?, &sample(values)?, &costs.0, &measure.0).py()?;
    Ok(PyRobustResult {
        risk: r.risk,
        deviation: r.deviation,
        minimizer: r.minimizer,
        weights: r.argmax_measure.weights().to_vec(),
    })
}

/// Closed forms valid for kind OURS under EL: (risk, deviation).
#[pyfunction]
fn closed_form(values: Vec<f64>, costs: &PyCostRates) -> PyResult<(f64, f64)> {
    let s = sample(values)?;
    Ok((
        robust::closed_form_risk(&s, &costs.0).py()?,
        robust::closed_form_deviation(&s, &costs.0).py()?,
    ))
}

/// Per-scenario loss at capital `x`.
#[pyfunction]
#[pyo3(signature = (values, costs, x, kind="OURS"))]
fn loss_profile(values: Vec<f64>, costs: &PyCostRates, x: f64, kind: &str) -> PyResult<Vec<f64>> {
    robust::loss_profile(self::kind(kind)?, &sample(values)?, &costs.0, x).py()
}

/// Supremum of the expected loss over the dual set: (value, weights).
#[pyfunction]
fn dual_sup(loss: Vec<f64>, measure: &PyRiskMeasure) -> PyResult<(f64, Vec<f64>)> {
    let (v, q) = robust::dual_sup(&loss, &measure.0).py()?;
    Ok((v, q.weights().to_vec()))
}

/// Linear-programming reference value of [`dual_sup`].
#[pyfunction]
fn dual_sup_lp(loss: Vec<f64>, measure: &PyRiskMeasure) -> PyResult<f64> {
    robust::dual_sup_lp_oracle(&loss, &measure.0).py()
}

/// Standardised innovation law, e.g. `InnovationDist("sstd", 6.0, 0.9)`.
#[pyclass(frozen, name = "InnovationDist", from_py_object)]
#[derive(Clone, Copy)]
struct PyInnovationDist(dist::InnovationDist);

#[pymethods]
impl PyInnovationDist {
    #[new]
    #[pyo3(signature = (family="norm", shape=None, skew=None))]
    fn new(family: &str, shape: Option<f64>, skew: Option<f64>) -> PyResult<Self> {
        let spec: DistSpec = family.parse().py()?;
        let init = spec.initial();
        let skew = skew.unwrap_or(1.0);
        if !spec.skewed && skew != 1.0 {
            return Err(PyValueError::new_err(format!("{family} is symmetric; use s{family} for a skew")));
        }
        Ok(Self(dist::InnovationDist::new(spec.family, shape.unwrap_or(init.shape()), skew).py()?))
    }

    fn pdf(&self, z: f64) -> f64 {
        self.0.pdf(z)
    }

    fn cdf(&self, z: f64) -> f64 {
        self.0.cdf(z)
    }

    fn quantile(&self, p: f64) -> PyResult<f64> {
        self.0.quantile(p).py()
    }

    /// Expected shortfall at level `alpha`, positive for losses.
    fn es(&self, alpha: f64) -> PyResult<f64> {
        dist::dist_es(&self.0, alpha).py()
    }

    /// Lower expectile at level `alpha`, returned with the loss sign.
    fn expectile(&self, alpha: f64) -> PyResult<f64> {
        dist::dist_expectile(&self.0, alpha).py()
    }

    fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.0.sample(&mut rng)).collect()
    }

    fn __repr__(&self) -> String {
        format!("InnovationDist('{}')", self.0)
    }
}

/// Fitted AR(1)-GARCH(1,1) model.
#[pyclass(frozen, name = "GarchFit", skip_from_py_object)]
struct PyGarchFit(garch::GarchFit);

#[pymethods]
impl PyGarchFit {
    #[getter]
    fn mu(&self) -> f64 {
        self.0.params.mu
    }
    #[getter]
    fn phi(&self) -> f64 {
        self.0.params.phi
    }
    #[getter]
    fn omega(&self) -> f64 {
        self.0.params.omega
    }
    #[getter]
    fn a(&self) -> f64 {
        self.0.params.a
    }
    #[getter]
    fn b(&self) -> f64 {
        self.0.params.b
    }
    #[getter]
    fn dist(&self) -> PyInnovationDist {
        PyInnovationDist(self.0.params.dist)
    }
    #[getter]
    fn loglik(&self) -> f64 {
        self.0.loglik
    }
    #[getter]
    fn converged(&self) -> bool {
        self.0.converged
    }
    #[getter]
    fn sigmas(&self) -> Vec<f64> {
        self.0.sigmas.clone()
    }

    /// One-step-ahead (mean, deviation).
    fn forecast_moments(&self) -> (f64, f64) {
        garch::forecast_moments(&self.0)
    }

    fn __repr__(&self) -> String {
        let p = &self.0.params;
        format!(
            "GarchFit(mu={:.4}, phi={:.4}, omega={:.4}, a={:.4}, b={:.4}, dist='{}')",
            p.mu, p.phi, p.omega, p.a, p.b, p.dist
        )
    }
}

#[pyfunction]
#[pyo3(signature = (returns, dist="norm"))]
fn garch_fit(returns: Vec<f64>, dist: &str) -> PyResult<PyGarchFit> {
    Ok(PyGarchFit(garch::fit(&sample(returns)?, dist.parse().py()?).py()?))
}

#[pyfunction]
#[pyo3(signature = (n, seed, mu=0.0, phi=0.0, omega=0.05, a=0.1, b=0.85, dist=None))]
#[allow(clippy::too_many_arguments)]
fn garch_simulate(
    n: usize,
    seed: u64,
    mu: f64,
    phi: f64,
    omega: f64,
    a: f64,
    b: f64,
    dist: Option<PyInnovationDist>,
) -> PyResult<Vec<f64>> {
    let d = dist.map_or_else(dist::InnovationDist::normal, |d| d.0);
    let p = GarchParams::new(mu, phi, omega, a, b, d).py()?;
    garch::simulate(&p, n, &mut ChaCha8Rng::seed_from_u64(seed)).py()
}

/// Risk forecast for the next day from a window of returns, e.g.
/// `risk_forecast("GARCH-sstd", window, RiskMeasure.es(0.025))`.
#[pyfunction]
fn risk_forecast(model: &str, window: Vec<f64>, measure: &PyRiskMeasure) -> PyResult<f64> {
    let m: ModelSpec = model.parse().py()?;
    garch::risk_forecast(&m, &sample(window)?, &measure.0).py()
}

fn config(path: Option<PathBuf>, overrides: Vec<(String, String)>) -> PyResult<RunConfig> {
    let usage = |e: cli::UsageError| PyValueError::new_err(e.0);
    let mut cfg = match path {
        Some(p) => RunConfig::load(&p).map_err(usage)?,
        None => RunConfig::default(),
    };
    for (k, v) in overrides {
        cfg.set(&k, &v).map_err(usage)?;
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

/// Runs `measure` or `select` on CSV inputs and returns the report CSV.
#[pyfunction]
#[pyo3(signature = (command, prices, yield_g, yield_l, config_path=None, overrides=Vec::new()))]
fn run_report(
    command: &str,
    prices: PathBuf,
    yield_g: PathBuf,
    yield_l: PathBuf,
    config_path: Option<PathBuf>,
    overrides: Vec<(String, String)>,
) -> PyResult<String> {
    let cfg = config(config_path, overrides)?;
    let ds = cli::ingest(&prices, &yield_g, &yield_l).py()?;
    let rep = match command {
        "measure" => cli::cmd_measure(&ds, &cfg),
        "select" => cli::cmd_select(&ds, &cfg),
        other => return Err(PyValueError::new_err(format!("unknown command {other:?}"))),
    }
    .py()?;
    Ok(rep.to_csv())
}

/// Writes a synthetic dataset (prices.csv, yield_g.csv, yield_l.csv).
#[pyfunction]
#[pyo3(signature = (seed, out, days=None))]
fn simulate_market(seed: u64, out: PathBuf, days: Option<usize>) -> PyResult<usize> {
    let mut sim = SimConfig::default();
    if let Some(d) = days {
        sim.days = d;
    }
    let ds = cli::cmd_simulate(seed, &sim).py()?;
    cli::write_dataset(&out, &ds).py()?;
    Ok(ds.dates.len())
}

#[pymodule]
#[pyo3(name = "robust_risk")]
pub fn robust_risk_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRiskMeasure>()?;
    m.add_class::<PyCostRates>()?;
    m.add_class::<PyRobustResult>()?;
    m.add_class::<PyInnovationDist>()?;
    m.add_class::<PyGarchFit>()?;
    m.add_function(wrap_pyfunction!(py_robust_risk, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(loss_profile, m)?)?;
    m.add_function(wrap_pyfunction!(dual_sup, m)?)?;
    m.add_function(wrap_pyfunction!(dual_sup_lp, m)?)?;
    m.add_function(wrap_pyfunction!(garch_fit, m)?)?;
    m.add_function(wrap_pyfunction!(garch_simulate, m)?)?;
    m.add_function(wrap_pyfunction!(risk_forecast, m)?)?;
    m.add_function(wrap_pyfunction!(run_report, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_market, m)?)?;
    Ok(())
}
