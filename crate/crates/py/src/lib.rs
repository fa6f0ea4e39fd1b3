//! Python bindings. The extension module is named `acbug`.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use acbug::baselines::{find_parents as core_find_parents, run_se as core_run_se, ParentsTestConfig, DEFAULT_ARM_CAP};
use acbug::design::{design_bound as core_design_bound, MarginalActionSet};
use acbug::env::ScmEnv;
use acbug::gen::GenConfig;
use acbug::harness::{aggregate, records_csv, run_experiment as core_run_experiment, summary_csv, ExperimentConfig, RunOptions};
use acbug::modl::{run_modl as core_run_modl, theoretical_complexity, ModlParams, Schedule};
use acbug::scm::{self, Intervention};
use acbug::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Input(m) | Error::Unsupported(m) => PyValueError::new_err(m),
        Error::Json(e) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse_schedule(name: &str) -> PyResult<Schedule> {
    serde_json::from_value(serde_json::Value::String(name.into())).map_err(|_| PyValueError::new_err(format!("unknown schedule {name:?}")))
}

/// A structural causal model with a real outcome.
#[pyclass(name = "Scm", module = "acbug")]
struct PyScm {
    inner: scm::Scm,
}

#[pymethods]
impl PyScm {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        scm::Scm::from_json(text).map(|inner| Self { inner }).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[getter]
    fn num_vars(&self) -> usize {
        self.inner.num_vars()
    }

    #[getter]
    fn supports(&self) -> Vec<usize> {
        self.inner.supports()
    }

    #[getter]
    fn outcome_parents(&self) -> Vec<usize> {
        self.inner.outcome_parents().to_vec()
    }

    #[getter]
    fn noise_sigma2(&self) -> f64 {
        self.inner.outcome.noise_sigma2
    }

    fn is_additive(&self) -> bool {
        self.inner.is_additive()
    }

    fn effect(&self, var: usize, value: usize) -> f64 {
        self.inner.effect(var, value)
    }

    /// Best global intervention and its value.
    fn best_global(&self) -> PyResult<(Vec<usize>, f64)> {
        scm::best_global(&self.inner).map_err(to_py)
    }

    fn epsilon_min(&self) -> f64 {
        scm::epsilon_min(&self.inner)
    }

    /// `E[Y | do(assignments)]` and its standard error (zero when exact).
    #[pyo3(signature = (assignments, budget = 100_000))]
    fn interventional_mean(&self, assignments: BTreeMap<usize, usize>, budget: usize) -> PyResult<(f64, f64)> {
        scm::interventional_mean(&self.inner, &Intervention { assignments }, budget).map_err(to_py)
    }

    /// One draw under an intervention: (variable values, outcome).
    fn sample(&self, assignments: BTreeMap<usize, usize>, seed: u64) -> PyResult<(Vec<usize>, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = self.inner.sample(&Intervention { assignments }, &mut rng).map_err(to_py)?;
        Ok((s.values, s.y))
    }

    fn __repr__(&self) -> String {
        format!("Scm(num_vars={}, outcome_parents={:?})", self.inner.num_vars(), self.inner.outcome_parents())
    }
}

/// Generate a random SCM; keyword arguments override generator defaults.
#[pyfunction]
#[pyo3(signature = (seed, **overrides))]
fn gen_scm(seed: u64, overrides: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<PyScm> {
    let mut value = serde_json::to_value(GenConfig::default()).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    if let Some(d) = overrides {
        for (k, v) in d.iter() {
            let key: String = k.extract()?;
            let json = if let Ok(i) = v.extract::<i64>() {
                serde_json::json!(i)
            } else {
                serde_json::json!(v.extract::<f64>()?)
            };
            value[key] = json;
        }
    }
    value["seed"] = serde_json::json!(seed);
    let cfg: GenConfig = serde_json::from_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    cfg.validate().map_err(to_py)?;
    acbug::gen::gen_scm(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).map(|inner| PyScm { inner }).map_err(to_py)
}

#[pyclass(name = "ModlRun", module = "acbug", get_all)]
struct PyModlRun {
    chosen: Vec<usize>,
    samples_used: usize,
    num_phases: usize,
    recovered_parents: Vec<usize>,
    true_gap: f64,
}

/// Run MODL with global interventions on `scm`.
#[pyfunction]
#[pyo3(signature = (scm, epsilon, delta, seed, reward_bound = 5.0, parents_bound = None, schedule = "proof_consistent"))]
fn run_modl(
    scm: &PyScm,
    epsilon: f64,
    delta: f64,
    seed: u64,
    reward_bound: f64,
    parents_bound: Option<usize>,
    schedule: &str,
) -> PyResult<PyModlRun> {
    let s = &scm.inner;
    let params = ModlParams::new(epsilon, delta, s.outcome.noise_sigma2, reward_bound)
        .with_parents_bound(parents_bound)
        .with_schedule(parse_schedule(schedule)?);
    let mut env = ScmEnv::global(s, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let res = core_run_modl(&mut env, &params, &mut rng).map_err(to_py)?;
    let optimum = acbug::harness::optimal_value(s).map_err(to_py)?;
    let gap = acbug::harness::true_gap(s, optimum, &env.intervention(&res.chosen)).map_err(to_py)?;
    Ok(PyModlRun {
        samples_used: res.samples_used,
        num_phases: res.phase_logs.len(),
        recovered_parents: res.recovered_parents().into_iter().collect(),
        chosen: res.chosen,
        true_gap: gap,
    })
}

/// Parent detection by single-variable interventions: (parents, samples).
#[pyfunction]
fn find_parents(scm: &PyScm, epsilon: f64, delta: f64, seed: u64) -> PyResult<(Vec<usize>, usize)> {
    let s = &scm.inner;
    let cfg = ParentsTestConfig::with_default_baseline(epsilon, delta, s.outcome.noise_sigma2, s.num_vars());
    let mut env = ScmEnv::global(s, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5851_f42d_4c95_7f2d);
    let res = core_find_parents(&mut env, &cfg, &mut rng).map_err(to_py)?;
    Ok((res.parents.into_iter().collect(), res.samples_used))
}

/// Successive elimination over all global interventions: (chosen, samples).
#[pyfunction]
#[pyo3(signature = (scm, epsilon, delta, seed, arm_cap = DEFAULT_ARM_CAP))]
fn run_se(scm: &PyScm, epsilon: f64, delta: f64, seed: u64, arm_cap: usize) -> PyResult<(Vec<usize>, usize)> {
    let s = &scm.inner;
    let mut env = ScmEnv::global(s, seed);
    let res = core_run_se(&mut env, epsilon, delta, s.outcome.noise_sigma2, arm_cap).map_err(to_py)?;
    Ok((res.chosen, res.samples_used))
}

/// Worst-case variance bound of a marginally uniform design of size `n`.
#[pyfunction]
fn design_bound(sets: Vec<Vec<usize>>, n: usize) -> PyResult<f64> {
    let set = MarginalActionSet::new(sets).map_err(to_py)?;
    core_design_bound(&set, n).map_err(to_py)
}

/// Instance-dependent complexity bound: (unknown parent count, known, minimum gap).
#[pyfunction]
#[pyo3(signature = (scm, epsilon, delta, reward_bound = 5.0))]
fn complexity_bound(scm: &PyScm, epsilon: f64, delta: f64, reward_bound: f64) -> PyResult<(f64, f64, f64)> {
    let params = ModlParams::new(epsilon, delta, scm.inner.outcome.noise_sigma2, reward_bound);
    let b = theoretical_complexity(&scm.inner, &params).map_err(to_py)?;
    Ok((b.h_eps, b.h_eps_known_py, b.delta_min))
}

/// Run an experiment from its JSON config: (records CSV, summary CSV).
#[pyfunction]
#[pyo3(signature = (config_json, jobs = None))]
fn run_experiment(py: Python<'_>, config_json: &str, jobs: Option<usize>) -> PyResult<(String, String)> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(to_py)?;
    let out = py
        .detach(|| core_run_experiment(&cfg, &RunOptions { jobs, dump_phases: false }))
        .map_err(to_py)?;
    let summary = aggregate(&out.records).map_err(to_py)?;
    Ok((records_csv(&out.records), summary_csv(&summary)))
}

#[pymodule]
#[pyo3(name = "acbug")]
fn acbug_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScm>()?;
    m.add_class::<PyModlRun>()?;
    m.add_function(wrap_pyfunction!(gen_scm, m)?)?;
    m.add_function(wrap_pyfunction!(run_modl, m)?)?;
    m.add_function(wrap_pyfunction!(find_parents, m)?)?;
    m.add_function(wrap_pyfunction!(run_se, m)?)?;
    m.add_function(wrap_pyfunction!(design_bound, m)?)?;
    m.add_function(wrap_pyfunction!(complexity_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
