//! Streaming replay of recorded strides through the estimator, with noise
//! injection, latency-aware sample delivery and accuracy metrics.

mod metrics;
mod sweep;

pub use metrics::{compute_metrics, pearson, AngleMetrics};
pub use sweep::{noise_grid, noise_sweep, noise_sweep_many, NoiseSweepReport, SweepConfig, SweepRow};

use crate::estimator::{EstimatorConfig, EstimatorError, EstimatorSession, ReferenceSequence, UpdateOutcome};
use crate::gait_data::{resample, segment_stride, GaitDataError, GaitTrajectory, StrideSegments};
use crate::numfmt::sig9;
use crate::predictor::{adjust_swing, PredictionPair, PredictorError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid replay config: {0}")]
    InvalidConfig(String),
    #[error("truth has a constant value, range-normalised RMSE is undefined")]
    DegenerateRange,
    #[error("sequences have lengths {0} and {1}, need equal lengths of at least 2")]
    LengthMismatch(usize, usize),
    #[error("replay produced no progress estimate")]
    NoEstimates,
    #[error(transparent)]
    Data(#[from] GaitDataError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
}

/// Elementwise `seq + N(0, std^2)`, reproducible for a given seed.
pub fn add_gaussian_noise(seq: &[f64], std: f64, seed: u64) -> Vec<f64> {
    if std <= 0.0 {
        return seq.to_vec();
    }
    let normal = Normal::new(0.0, std).expect("finite positive std");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    seq.iter().map(|v| v + normal.sample(&mut rng)).collect()
}

/// Time charged for one estimator update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum LatencyModel {
    /// Wall-clock time of the update call.
    Measured,
    /// A constant, for reproducible runs.
    Fixed { ms: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplayConfig {
    pub rate_hz: f64,
    pub noise_std: f64,
    pub rng_seed: u64,
    pub latency: LatencyModel,
    /// Largest progress error, in percentage points, counted as accurate.
    pub tolerance_pct: f64,
    pub estimator: EstimatorConfig,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self {
            rate_hz: 100.0,
            noise_std: 0.0,
            rng_seed: 0,
            latency: LatencyModel::Measured,
            tolerance_pct: 2.0,
            estimator: EstimatorConfig::default(),
        }
    }
}

impl ReplayConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidConfig(m));
        if !(25.0..=150.0).contains(&self.rate_hz) {
            return bad(format!("rate_hz must be in [25, 150], got {}", self.rate_hz));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad(format!("noise_std must be finite and >= 0, got {}", self.noise_std));
        }
        if let LatencyModel::Fixed { ms } = self.latency {
            if !(ms >= 0.0 && ms.is_finite()) {
                return bad(format!("fixed latency must be >= 0 ms, got {ms}"));
            }
        }
        if !(self.tolerance_pct >= 0.0) {
            return bad("tolerance_pct must be >= 0".into());
        }
        self.estimator.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    /// Seconds since the thigh-minimum event.
    pub t: f64,
    pub progress_pred: f64,
    pub progress_truth: f64,
    pub knee_index: usize,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub rate_hz: f64,
    pub noise_std: f64,
    pub progress_rmse_pct: f64,
    pub progress_max_err_pct: f64,
    pub progress_accuracy: f64,
    pub thigh_rmse_pct: f64,
    pub knee_rmse_pct: f64,
    pub pearson_thigh: f64,
    pub pearson_knee: f64,
    pub mean_latency_ms: f64,
    /// Samples on the clock and samples the estimator consumed.
    pub samples: usize,
    pub updates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutput {
    pub metrics: RunMetrics,
    pub steps: Vec<StepLog>,
}

impl ReplayOutput {
    /// `t,progress_pred,progress_truth,knee_index,latency_ms`
    pub fn steps_csv(&self) -> String {
        let mut out = String::from("t,progress_pred,progress_truth,knee_index,latency_ms\n");
        for s in &self.steps {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                sig9(s.t),
                sig9(s.progress_pred),
                sig9(s.progress_truth),
                s.knee_index,
                sig9(s.latency_ms)
            ));
        }
        out
    }
}

/// The recorded crossing stride itself as a prediction, resampled to `len`.
pub fn ground_truth_reference(traj: &GaitTrajectory, len: usize) -> Result<PredictionPair, HarnessError> {
    let seg = segment_stride(traj, 0)?;
    Ok(PredictionPair::new(resample(&seg.thigh(), len)?, resample(&seg.knee(), len)?)?)
}

/// The stride on a clock at `rate_hz` that starts at the thigh-minimum event:
/// sample times and linearly interpolated thigh angles.
fn clock_samples(traj: &GaitTrajectory, seg: &StrideSegments, rate_hz: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let native = traj.rate_hz();
    let thigh = seg.thigh();
    let duration = (thigh.len() - 1) as f64 / native;
    let count = (duration * rate_hz + 1e-9).floor() as usize + 1;
    let times: Vec<f64> = (0..count).map(|k| k as f64 / rate_hz).collect();
    let values = times
        .iter()
        .map(|&t| {
            let x = t * native;
            let lo = (x.floor() as usize).min(thigh.len() - 1);
            let frac = x - lo as f64;
            if lo + 1 >= thigh.len() || frac <= 1e-12 {
                thigh[lo]
            } else {
                thigh[lo] + (thigh[lo + 1] - thigh[lo]) * frac
            }
        })
        .collect();
    (times, values, duration)
}

/// Streams the crossing stride of `traj` into an estimator that matches it
/// against `reference.thigh_pred`.
///
/// Samples arrive on a clock at `cfg.rate_hz`. While an update is in flight
/// new samples queue up; when it finishes, only the newest queued sample is
/// delivered and the older ones are dropped. Ground-truth progress of a sample
/// is its elapsed time over the stride duration. The reference spans the
/// recorded stride duration.
pub fn replay(
    traj: &GaitTrajectory,
    reference: &PredictionPair,
    cfg: &ReplayConfig,
) -> Result<ReplayOutput, HarnessError> {
    cfg.validate()?;
    let seg = segment_stride(traj, 0)?;
    let (times, clean, duration) = clock_samples(traj, &seg, cfg.rate_hz);
    let observed = add_gaussian_noise(&clean, cfg.noise_std, cfg.rng_seed);

    let rs = ReferenceSequence::new(reference.thigh_pred.clone(), duration)?;
    let mut session =
        EstimatorSession::new(rs, cfg.rate_hz, cfg.estimator.clone())?.with_knee_len(reference.knee_pred.len());

    let mut steps = Vec::new();
    let mut busy_until = f64::NEG_INFINITY;
    let mut next = 0;
    let mut updates = 0;
    let mut latency_sum = 0.0;
    while next < times.len() {
        // The newest sample that has arrived by the time the estimator is free.
        let mut k = next;
        while k + 1 < times.len() && times[k + 1] <= busy_until {
            k += 1;
        }
        let started = Instant::now();
        let outcome = session.update(times[k], observed[k])?;
        let latency_ms = match cfg.latency {
            LatencyModel::Measured => started.elapsed().as_secs_f64() * 1e3,
            LatencyModel::Fixed { ms } => ms,
        };
        busy_until = times[k].max(busy_until) + latency_ms / 1e3;
        updates += 1;
        latency_sum += latency_ms;
        if let UpdateOutcome::Estimate(e) = outcome {
            steps.push(StepLog {
                t: times[k],
                progress_pred: e.progress_pct,
                progress_truth: (100.0 * times[k] / duration).min(100.0),
                knee_index: e.knee_index,
                latency_ms,
            });
        }
        next = k + 1;
    }
    if steps.is_empty() {
        return Err(HarnessError::NoEstimates);
    }

    let errs: Vec<f64> = steps.iter().map(|s| s.progress_pred - s.progress_truth).collect();
    let progress_rmse_pct = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt();
    let progress_max_err_pct = errs.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let hits = errs.iter().filter(|e| e.abs() <= cfg.tolerance_pct + 1e-12).count();

    let len = reference.len();
    let adjusted = adjust_swing(reference, seg.angle[0].1);
    let thigh = compute_metrics(&adjusted.thigh_pred, &resample(&seg.thigh(), len)?)?;
    let knee = compute_metrics(&adjusted.knee_pred, &resample(&seg.knee(), len)?)?;

    let metrics = RunMetrics {
        rate_hz: cfg.rate_hz,
        noise_std: cfg.noise_std,
        progress_rmse_pct,
        progress_max_err_pct,
        progress_accuracy: hits as f64 / errs.len() as f64,
        thigh_rmse_pct: thigh.rmse_pct,
        knee_rmse_pct: knee.rmse_pct,
        pearson_thigh: thigh.pearson,
        pearson_knee: knee.pearson,
        mean_latency_ms: latency_sum / updates as f64,
        samples: times.len(),
        updates,
    };
    Ok(ReplayOutput { metrics, steps })
}

#[cfg(test)]
mod tests;
