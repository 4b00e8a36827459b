//! Python bindings: instance generation, the offline solver, every policy,
//! and the experiment harness.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use olplab::algorithms::{
    benchmark_subgradient, configure_two_phase_experiment, configure_two_phase_theorem, learner_as_decider,
    resolving_baseline, two_phase, ExperimentSetting, StepsizeSchedule,
};
use olplab::bench::{aggregate_csv, fit_loglog_slope, run_plan, ExperimentPlan};
use olplab::distributions::{derive_bounds, DistributionSpec, ResourceLaw};
use olplab::domain::{regret, violation, Arrival, BoundsSpec, DecisionTrace, Instance, MarketConfig};
use olplab::dual_geometry::{DualPrice, ErrorBoundSpec};
use olplab::hindsight;

fn err(e: olplab::Error) -> PyErr {
    match e {
        olplab::Error::Simplex { .. } | olplab::Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn dist_from_name(name: &str, m: usize) -> PyResult<DistributionSpec> {
    Ok(match name {
        "multi-secretary" => DistributionSpec::MultiSecretary,
        "continuous-1" => DistributionSpec::ContinuousU1 { m },
        "beta" => DistributionSpec::BetaCont,
        "wide-uniform" => DistributionSpec::WideUniform,
        other => return Err(PyValueError::new_err(format!("unknown distribution {other:?}"))),
    })
}

/// A realized OLP instance: `T` arrivals plus the per-period resources `d`.
#[pyclass(name = "Instance", module = "olplab_py", frozen)]
struct PyInstance {
    inner: Instance,
    bounds: BoundsSpec,
}

#[pymethods]
impl PyInstance {
    /// Draws `horizon` arrivals from a named law (`multi-secretary`,
    /// `continuous-1`, `beta`, `wide-uniform`).
    #[staticmethod]
    #[pyo3(signature = (dist, horizon, d, seed=0))]
    fn generate(dist: &str, horizon: usize, d: Vec<f64>, seed: u64) -> PyResult<Self> {
        let spec = dist_from_name(dist, d.len())?;
        let bounds = derive_bounds(&spec, &ResourceLaw::Fixed(d.clone())).map_err(err)?;
        let inner = MarketConfig::new(horizon, d, spec, seed).map_err(err)?.generate();
        Ok(Self { inner, bounds })
    }

    /// Builds an instance from explicit rewards `c`, request rows `a` and `d`.
    #[staticmethod]
    fn from_arrays(c: Vec<f64>, a: Vec<Vec<f64>>, d: Vec<f64>) -> PyResult<Self> {
        if c.len() != a.len() {
            return Err(PyValueError::new_err("c and a must have the same length"));
        }
        let arrivals: Vec<Arrival> = c.into_iter().zip(a).map(|(c, a)| Arrival::new(c, a)).collect();
        let inner = Instance::from_arrivals(&arrivals, d).map_err(err)?;
        let a_max = inner.a.iter().fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
        let c_max = inner.c.iter().fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
        let d_lo = inner.d.iter().copied().fold(f64::INFINITY, f64::min);
        let d_hi = inner.d.iter().copied().fold(0.0, f64::max);
        let bounds = BoundsSpec::new(inner.m, a_max, c_max, d_lo, d_hi).map_err(err)?;
        Ok(Self { inner, bounds })
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }

    #[getter]
    fn d(&self) -> Vec<f64> {
        self.inner.d.clone()
    }

    #[getter]
    fn c(&self) -> Vec<f64> {
        self.inner.c.clone()
    }

    /// Request rows `a_t`.
    #[getter]
    fn a(&self) -> Vec<Vec<f64>> {
        self.inner.a.chunks(self.inner.m).map(<[f64]>::to_vec).collect()
    }

    /// Offline optimum: dict with `value`, `x` and dual price `y`.
    fn hindsight<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let sol = hindsight::solve(&self.inner).map_err(err)?;
        let out = PyDict::new(py);
        out.set_item("value", sol.value)?;
        out.set_item("x", sol.x)?;
        out.set_item("y", sol.y)?;
        Ok(out)
    }

    /// Constant-step subgradient policy; `alpha=None` uses the
    /// `1/sqrt(T)` benchmark stepsize.
    #[pyo3(signature = (alpha=None, y_init=None))]
    fn run_subgradient<'py>(
        &self,
        py: Python<'py>,
        alpha: Option<f64>,
        y_init: Option<Vec<f64>>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let schedule = match alpha {
            Some(alpha) => StepsizeSchedule::Constant { alpha },
            None => StepsizeSchedule::benchmark(&self.bounds, self.inner.horizon()),
        };
        let y0 = match y_init {
            Some(y) => DualPrice::new(y).map_err(err)?,
            None => DualPrice::zeros(self.inner.m),
        };
        let run = benchmark_subgradient(&self.inner, schedule, &y0).map_err(err)?;
        self.score(py, &run.trace, run.y_final.as_slice(), None)
    }

    /// Two-phase policy with the experiment configuration for `setting`
    /// (`continuous` or `finite`), or the theorem configuration when
    /// `gamma` and `mu` are given.
    #[pyo3(signature = (setting="continuous", gamma=None, mu=None, scale=1.0))]
    fn run_two_phase<'py>(
        &self,
        py: Python<'py>,
        setting: &str,
        gamma: Option<f64>,
        mu: Option<f64>,
        scale: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let horizon = self.inner.horizon();
        let tp = match (gamma, mu) {
            (Some(g), Some(mu)) => {
                let eb = ErrorBoundSpec::new(g, mu, 0.0).map_err(err)?;
                configure_two_phase_theorem(horizon, &eb, &self.bounds, scale).map_err(err)?
            }
            (None, None) => {
                let setting = match setting {
                    "continuous" => ExperimentSetting::Continuous,
                    "finite" => ExperimentSetting::Finite,
                    other => return Err(PyValueError::new_err(format!("unknown setting {other:?}"))),
                };
                configure_two_phase_experiment(horizon, setting, &self.bounds).map_err(err)?
            }
            _ => return Err(PyValueError::new_err("gamma and mu must be given together")),
        };
        let run = two_phase(&self.inner, &tp, &self.bounds).map_err(err)?;
        let out = self.score(py, &run.trace, run.y_final.as_slice(), Some(tp.t_e))?;
        out.set_item("learned", run.learned.into_vec())?;
        Ok(out)
    }

    /// The `1/(mu t)` estimator used for decisions.
    #[pyo3(signature = (mu=0.5))]
    fn run_learner_as_decider<'py>(&self, py: Python<'py>, mu: f64) -> PyResult<Bound<'py, PyDict>> {
        let run = learner_as_decider(&self.inner, mu).map_err(err)?;
        self.score(py, &run.trace, run.y_final.as_slice(), None)
    }

    /// Periodic LP re-solving baseline (default period `ceil(sqrt(T))`).
    #[pyo3(signature = (every=None))]
    fn run_resolving<'py>(&self, py: Python<'py>, every: Option<usize>) -> PyResult<Bound<'py, PyDict>> {
        let every = every.unwrap_or_else(|| (self.inner.horizon() as f64).sqrt().ceil() as usize);
        let run = resolving_baseline(&self.inner, every).map_err(err)?;
        self.score(py, &run.trace, &run.last_price, None)
    }

    fn __repr__(&self) -> String {
        format!("Instance(T={}, m={}, d={:?})", self.inner.horizon(), self.inner.m, self.inner.d)
    }
}

impl PyInstance {
    fn score<'py>(
        &self,
        py: Python<'py>,
        trace: &DecisionTrace,
        y: &[f64],
        t_e: Option<usize>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let best = hindsight::solve(&self.inner).map_err(err)?.value;
        let out = PyDict::new(py);
        out.set_item("regret", regret(trace, best))?;
        out.set_item("violation", violation(trace, &self.inner.budget()))?;
        out.set_item("revenue", trace.revenue)?;
        out.set_item("x", trace.x.clone())?;
        out.set_item("y_final", y.to_vec())?;
        if let Some(t_e) = t_e {
            out.set_item("t_e", t_e)?;
        }
        Ok(out)
    }
}

/// JSON of a named scenario plan (`continuous-1`, `finite-2`, `dilemma`, ...).
#[pyfunction]
fn scenario(name: &str) -> PyResult<String> {
    Ok(ExperimentPlan::preset(name).map_err(err)?.to_json())
}

/// Runs a JSON plan; returns `(trials_csv, aggregate_csv)`.
#[pyfunction]
fn run_experiment(py: Python<'_>, plan_json: &str) -> PyResult<(String, String)> {
    let plan = ExperimentPlan::from_json(plan_json).map_err(err)?;
    let outcome = py.detach(|| run_plan(&plan)).map_err(err)?;
    Ok((outcome.trials_csv(), aggregate_csv(&outcome.rows)))
}

/// Least-squares slope of `ln y` on `ln x`.
#[pyfunction]
fn loglog_slope(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(PyValueError::new_err("need two equally long sequences of length >= 2"));
    }
    fit_loglog_slope(&xs, &ys).map_err(err)
}

#[pymodule]
fn olplab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(loglog_slope, m)?)?;
    Ok(())
}
