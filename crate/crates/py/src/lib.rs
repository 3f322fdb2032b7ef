//! Python bindings: trajectories, DTW, the streaming estimator, predictors,
//! replay and the architecture search.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::path::PathBuf;
use stridephase::estimator::{EstimatorConfig, EstimatorSession, ReferenceSequence, UpdateOutcome};
use stridephase::evolution::{evolve as run_evolve, EvolutionData, GaConfig};
use stridephase::gait_data::{generate_synthetic, load_trajectory, save_trajectory, GaitTrajectory, SyntheticGaitConfig};
use stridephase::harness::{ground_truth_reference, noise_sweep as run_sweep, replay, LatencyModel, ReplayConfig, RunMetrics, SweepConfig};
use stridephase::predictor::{adjust_swing, parse_layers, spec_with_output, Example, FeatureConfig, PredictionPair, TrainConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Trajectory", module = "stridephase_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyTrajectory {
    inner: GaitTrajectory,
}

#[pymethods]
impl PyTrajectory {
    /// A generated session. `varied` draws obstacle, foot distance, stride
    /// duration and leg length from the seed.
    #[staticmethod]
    #[pyo3(signature = (seed=0, rate_hz=100.0, varied=false))]
    fn synthetic(seed: u64, rate_hz: f64, varied: bool) -> PyResult<Self> {
        let cfg = if varied {
            SyntheticGaitConfig::varied(seed, rate_hz)
        } else {
            SyntheticGaitConfig { seed, rate_hz, ..SyntheticGaitConfig::default() }
        };
        Ok(Self { inner: generate_synthetic(&cfg).map_err(value_err)? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        load_trajectory(&path).map(|inner| Self { inner }).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_trajectory(&self.inner, &path).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[getter]
    fn rate_hz(&self) -> f64 {
        self.inner.rate_hz()
    }

    fn thigh(&self) -> Vec<f64> {
        self.inner.thigh()
    }

    fn knee(&self) -> Vec<f64> {
        self.inner.knee()
    }

    fn ankle_z(&self) -> Vec<f64> {
        self.inner.ankle_z()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// DTW cost and warping path of two sequences.
#[pyfunction]
fn dtw_distance(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, Vec<(usize, usize)>)> {
    let (cost, path) = stridephase::dtw_distance(&a, &b).map_err(value_err)?;
    Ok((cost, path.pairs))
}

/// DTW cost by enumerating every warping path. Tiny inputs only.
#[pyfunction]
fn dtw_brute_force(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    stridephase::dtw_brute_force(&a, &b).map_err(value_err)
}

#[pyclass(name = "Estimator", module = "stridephase_py")]
struct PyEstimator {
    inner: EstimatorSession,
}

#[pymethods]
impl PyEstimator {
    #[new]
    #[pyo3(signature = (reference, duration_s, rate_hz, knee_len=None))]
    fn new(reference: Vec<f64>, duration_s: f64, rate_hz: f64, knee_len: Option<usize>) -> PyResult<Self> {
        let len = reference.len();
        let rs = ReferenceSequence::new(reference, duration_s).map_err(value_err)?;
        let session = EstimatorSession::new(rs, rate_hz, EstimatorConfig::default()).map_err(value_err)?;
        Ok(Self { inner: session.with_knee_len(knee_len.unwrap_or(len)) })
    }

    /// Feeds one sample. Returns `None` until enough samples have arrived,
    /// then a dict with the progress estimate.
    fn update<'py>(&mut self, py: Python<'py>, t_s: f64, thigh_deg: f64) -> PyResult<Option<Bound<'py, PyDict>>> {
        let UpdateOutcome::Estimate(e) = self.inner.update(t_s, thigh_deg).map_err(value_err)? else {
            return Ok(None);
        };
        let d = PyDict::new(py);
        d.set_item("progress_pct", e.progress_pct)?;
        d.set_item("raw_progress_pct", e.raw_progress_pct)?;
        d.set_item("knee_index", e.knee_index)?;
        d.set_item("best_i", e.best_i)?;
        d.set_item("window_len", e.window_len)?;
        d.set_item("t_y", e.params_hat.t_y)?;
        d.set_item("s_y", e.params_hat.s_y)?;
        d.set_item("s_x", e.params_hat.s_x)?;
        d.set_item("dtw_cost", e.dtw_cost)?;
        d.set_item("mode", format!("{:?}", e.mode).to_lowercase())?;
        Ok(Some(d))
    }
}

#[pyclass(name = "Predictor", module = "stridephase_py", frozen)]
struct PyPredictor {
    inner: stridephase::Predictor,
}

#[pymethods]
impl PyPredictor {
    /// Trains a network with the given hidden layers, e.g.
    /// `"dense:64:tanh:0|attention:32:relu:0.1"`.
    #[staticmethod]
    #[pyo3(signature = (sessions, layers, seed=0, max_epochs=300))]
    fn train(sessions: Vec<PyTrajectory>, layers: &str, seed: u64, max_epochs: usize) -> PyResult<Self> {
        let features = FeatureConfig::default();
        let spec = spec_with_output(parse_layers(layers).map_err(value_err)?, &features);
        let examples = sessions
            .iter()
            .map(|s| Example::from_trajectory(&s.inner, &features))
            .collect::<Result<Vec<_>, _>>()
            .map_err(value_err)?;
        let cfg = TrainConfig { rng_seed: seed, max_epochs, ..TrainConfig::default() };
        let (inner, _) = stridephase::Predictor::fit(spec, features, &examples, &cfg).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        stridephase::Predictor::load(&path).map(|inner| Self { inner }).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    /// Predicted thigh and knee trajectories for the crossing stride of a
    /// session, joined continuously to the knee angle at the stride start.
    fn predict(&self, session: &PyTrajectory) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let p = self.prediction(&session.inner)?;
        Ok((p.thigh_pred, p.knee_pred))
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }
}

impl PyPredictor {
    fn prediction(&self, traj: &GaitTrajectory) -> PyResult<PredictionPair> {
        let ex = Example::from_trajectory(traj, self.inner.features()).map_err(value_err)?;
        let p = self.inner.predict_example(&ex).map_err(value_err)?;
        Ok(adjust_swing(&p, ex.knee_at_event))
    }
}

fn reference(traj: &GaitTrajectory, predictor: Option<&PyPredictor>) -> PyResult<PredictionPair> {
    match predictor {
        Some(p) => p.prediction(traj),
        None => ground_truth_reference(traj, FeatureConfig::default().trajectory_len).map_err(value_err),
    }
}

fn replay_config(rate_hz: f64, noise_std: f64, seed: u64, latency_ms: Option<f64>) -> ReplayConfig {
    ReplayConfig {
        rate_hz,
        noise_std,
        rng_seed: seed,
        latency: latency_ms.map_or(LatencyModel::Measured, |ms| LatencyModel::Fixed { ms }),
        ..ReplayConfig::default()
    }
}

fn metrics_dict<'py>(py: Python<'py>, m: &RunMetrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("rate_hz", m.rate_hz)?;
    d.set_item("noise_std", m.noise_std)?;
    d.set_item("progress_rmse_pct", m.progress_rmse_pct)?;
    d.set_item("progress_max_err_pct", m.progress_max_err_pct)?;
    d.set_item("progress_accuracy", m.progress_accuracy)?;
    d.set_item("thigh_rmse_pct", m.thigh_rmse_pct)?;
    d.set_item("knee_rmse_pct", m.knee_rmse_pct)?;
    d.set_item("pearson_thigh", m.pearson_thigh)?;
    d.set_item("pearson_knee", m.pearson_knee)?;
    d.set_item("mean_latency_ms", m.mean_latency_ms)?;
    d.set_item("samples", m.samples)?;
    d.set_item("updates", m.updates)?;
    Ok(d)
}

/// Streams the crossing stride through the estimator. Without a predictor
/// the recorded stride is its own reference. `latency_ms=None` charges the
/// measured compute time of each update.
#[pyfunction]
#[pyo3(signature = (session, rate_hz=100.0, noise_std=0.0, seed=0, predictor=None, latency_ms=Some(0.0)))]
fn simulate<'py>(
    py: Python<'py>,
    session: &PyTrajectory,
    rate_hz: f64,
    noise_std: f64,
    seed: u64,
    predictor: Option<PyRef<'py, PyPredictor>>,
    latency_ms: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = reference(&session.inner, predictor.as_deref())?;
    let out = replay(&session.inner, &r, &replay_config(rate_hz, noise_std, seed, latency_ms)).map_err(value_err)?;
    metrics_dict(py, &out.metrics)
}

/// `(noise_std, progress_rmse_pct, accuracy)` for each level of the grid.
#[pyfunction]
#[pyo3(signature = (session, rate_hz=100.0, std_min=0.05, std_step=0.025, std_max=3.0, repeats=1, seed=0, predictor=None))]
#[allow(clippy::too_many_arguments)]
fn noise_sweep(
    session: &PyTrajectory,
    rate_hz: f64,
    std_min: f64,
    std_step: f64,
    std_max: f64,
    repeats: usize,
    seed: u64,
    predictor: Option<PyRef<'_, PyPredictor>>,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let r = reference(&session.inner, predictor.as_deref())?;
    let sweep = SweepConfig { std_min, std_step, std_max, repeats };
    let rep = run_sweep(&session.inner, &r, &replay_config(rate_hz, 0.0, seed, Some(0.0)), &sweep).map_err(value_err)?;
    Ok(rep.rows.iter().map(|r| (r.noise_std, r.progress_rmse_pct, r.accuracy)).collect())
}

/// Genetic search over architectures. Returns the best predictor, its layer
/// description and the best total fitness of every generation.
#[pyfunction]
#[pyo3(signature = (train, holdout, population=20, generations=20, seed=0))]
fn evolve(
    train: Vec<PyTrajectory>,
    holdout: Vec<PyTrajectory>,
    population: usize,
    generations: usize,
    seed: u64,
) -> PyResult<(Option<PyPredictor>, String, Vec<f64>)> {
    let cfg = GaConfig { population, generations, rng_seed: seed, ..GaConfig::default() };
    let train: Vec<GaitTrajectory> = train.into_iter().map(|t| t.inner).collect();
    let holdout: Vec<GaitTrajectory> = holdout.into_iter().map(|t| t.inner).collect();
    let data = EvolutionData::from_sessions(&train, &holdout, &cfg.features).map_err(value_err)?;
    let res = run_evolve(&cfg, &data).map_err(value_err)?;
    let history = res.history.iter().map(|h| h.best_total).collect();
    Ok((res.best.predictor.map(|inner| PyPredictor { inner }), res.best.genome.describe(), history))
}

#[pymodule]
fn stridephase_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyEstimator>()?;
    m.add_class::<PyPredictor>()?;
    m.add_function(wrap_pyfunction!(dtw_distance, m)?)?;
    m.add_function(wrap_pyfunction!(dtw_brute_force, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(noise_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    Ok(())
}
