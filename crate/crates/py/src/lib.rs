//! Python bindings. Structured results come back as plain dicts and lists.

use std::path::PathBuf;

use coopcp::baselines::PolicyKind;
use coopcp::env::{CoopEnv, OBS_DIM};
use coopcp::harness::{self, ExperimentConfig};
use coopcp::perception::{classify_region, frequencies_and_thresholds};
use coopcp::scenario::EpisodeTrace;
use coopcp::{allocate as solve_allocation, PairInput};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: coopcp::Error) -> PyErr {
    if e.is_config_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn config(toml: Option<&str>) -> PyResult<ExperimentConfig> {
    match toml {
        Some(t) => ExperimentConfig::from_toml(t).map_err(err),
        None => Ok(ExperimentConfig::default()),
    }
}

/// Region thresholds for workload `w` under the config (reference defaults if omitted).
#[pyfunction]
#[pyo3(signature = (workload, config_toml=None))]
fn thresholds<'py>(py: Python<'py>, workload: f64, config_toml: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let m = config(config_toml)?.model().map_err(err)?;
    let t = frequencies_and_thresholds(workload, &m.costs, &m.perception).map_err(err)?;
    to_py(py, &t)
}

/// Region label ("R1".."R5") of a (rate, frequency) operating point.
#[pyfunction]
#[pyo3(signature = (rate_bps, freq_hz, workload, config_toml=None))]
fn region(rate_bps: f64, freq_hz: f64, workload: f64, config_toml: Option<&str>) -> PyResult<String> {
    let m = config(config_toml)?.model().map_err(err)?;
    let r = classify_region(rate_bps, freq_hz, workload, &m.costs, &m.perception).map_err(err)?;
    Ok(format!("{r:?}"))
}

/// Joint frequency/bandwidth allocation for cooperating pairs given as (W, D_m) tuples.
#[pyfunction]
#[pyo3(signature = (pairs, bandwidth_mhz=10.5, config_toml=None))]
fn allocate<'py>(
    py: Python<'py>,
    pairs: Vec<(f64, f64)>,
    bandwidth_mhz: f64,
    config_toml: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let c = config(config_toml)?;
    let pairs: Vec<PairInput> = pairs.into_iter().map(|(workload, distance_m)| PairInput { workload, distance_m }).collect();
    let r = solve_allocation(&pairs, bandwidth_mhz * 1e6, &c.model().map_err(err)?, &c.solver).map_err(err)?;
    to_py(py, &r)
}

/// Evaluate a policy ("random", "allcp", "brute" or "learned:<path>") and return the summary.
#[pyfunction]
#[pyo3(signature = (policy, episodes=None, seed=None, config_toml=None))]
fn simulate<'py>(
    py: Python<'py>,
    policy: &str,
    episodes: Option<usize>,
    seed: Option<u64>,
    config_toml: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut c = config(config_toml)?;
    c.policy = policy.parse::<PolicyKind>().map_err(err)?;
    if let Some(n) = episodes {
        c.episodes = n;
    }
    if let Some(s) = seed {
        c.seed = s;
    }
    let records = py.detach(|| harness::simulate(&c, &c.policy, None)).map_err(err)?;
    let summary = harness::aggregate(&records).unwrap_or_else(|_| harness::MetricsSummary::no_data());
    to_py(py, &summary)
}

/// Train actors, writing the checkpoint and training log into `out_dir`. Returns the checkpoint path.
#[pyfunction]
#[pyo3(signature = (out_dir, episodes=None, config_toml=None))]
fn train(py: Python<'_>, out_dir: PathBuf, episodes: Option<usize>, config_toml: Option<&str>) -> PyResult<PathBuf> {
    let mut c = config(config_toml)?;
    c.output_dir = out_dir;
    if let Some(n) = episodes {
        c.learner.episodes = n;
    }
    let (path, _) = py.detach(|| harness::train(&c)).map_err(err)?;
    Ok(path)
}

/// The slot-level environment over one generated evaluation episode.
#[pyclass(name = "Env", unsendable)]
struct PyEnv {
    env: CoopEnv,
    trace: EpisodeTrace,
    total_hz: f64,
}

#[pymethods]
impl PyEnv {
    #[new]
    #[pyo3(signature = (episode=0, config_toml=None))]
    fn new(episode: usize, config_toml: Option<&str>) -> PyResult<Self> {
        let c = config(config_toml)?;
        let trace = c.eval_trace(episode).map_err(err)?;
        let mut env = c.env().map_err(err)?;
        env.reset(trace.clone()).map_err(err)?;
        Ok(Self { env, trace, total_hz: c.scenario.bandwidth_hz })
    }

    /// Restart the episode; returns per-agent feature vectors.
    fn reset(&mut self) -> PyResult<Vec<Vec<f64>>> {
        self.env.reset(self.trace.clone()).map_err(err)?;
        Ok(self.features())
    }

    #[getter]
    fn agents(&self) -> usize {
        self.env.agents()
    }

    #[getter]
    fn slots(&self) -> usize {
        self.trace.len()
    }

    #[getter]
    fn obs_dim(&self) -> usize {
        OBS_DIM
    }

    #[getter]
    fn done(&self) -> bool {
        self.env.is_done()
    }

    fn observations<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.env.observations())
    }

    fn features(&self) -> Vec<Vec<f64>> {
        self.env.observations().iter().map(|o| o.features(self.total_hz).to_vec()).collect()
    }

    /// Apply one cooperation bit per pair; returns the step outcome as a dict.
    fn step<'py>(&mut self, py: Python<'py>, actions: Vec<u8>) -> PyResult<Bound<'py, PyAny>> {
        let out = self.env.step(&actions).map_err(err)?;
        to_py(py, &out)
    }
}

#[pymodule]
fn pycoopcp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(region, m)?)?;
    m.add_function(wrap_pyfunction!(allocate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_class::<PyEnv>()?;
    Ok(())
}
