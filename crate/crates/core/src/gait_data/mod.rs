//! Gait trajectories, stride segmentation, resampling and the synthetic
//! generator that stands in for motion-capture sessions.

mod io;
mod segment;
mod synth;

pub use io::{load_trajectory, parse_trajectory, save_trajectory, write_trajectory};
pub use segment::{local_minima, segment_stride, smooth5, StrideSegments};
pub use synth::{generate_synthetic, ShapeParams, SyntheticGaitConfig};

use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

/// Maximum deviation of a sample interval from `1 / rate_hz`.
pub const SPACING_TOLERANCE_S: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GaitDataError {
    #[error("no local minimum of {signal} found at or after sample {after}")]
    NoMinimumFound { signal: &'static str, after: usize },
    #[error("stride segment has {len} samples, at least 5 are required")]
    SegmentTooShort { len: usize },
    #[error("pre-crossing window needs {needed} samples before the thigh minimum, only {available} exist")]
    InsufficientPreCrossing { needed: usize, available: usize },
    #[error("sequence has {len} values, at least 2 are required")]
    TooShort { len: usize },
    #[error("invalid synthetic gait config: {0}")]
    InvalidConfig(String),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Anthropometrics of the recorded subject.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubjectInfo {
    pub height_cm: f64,
    pub mass_kg: f64,
    pub leg_length_cm: f64,
    pub age_yr: f64,
}

impl Default for SubjectInfo {
    fn default() -> Self {
        Self {
            height_cm: 175.0,
            mass_kg: 72.0,
            leg_length_cm: 89.0,
            age_yr: 21.0,
        }
    }
}

impl SubjectInfo {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("height_cm", self.height_cm),
            ("mass_kg", self.mass_kg),
            ("leg_length_cm", self.leg_length_cm),
            ("age_yr", self.age_yr),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("subject {name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// One time-stamped kinematic sample. Angles in degrees, height in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitSample {
    pub t: f64,
    pub thigh_deg: f64,
    pub knee_deg: f64,
    pub ankle_z_mm: f64,
}

/// A uniformly sampled recording session.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitTrajectory {
    samples: Vec<GaitSample>,
    rate_hz: f64,
    subject: SubjectInfo,
    seed: Option<u64>,
}

impl GaitTrajectory {
    pub fn new(
        samples: Vec<GaitSample>,
        rate_hz: f64,
        subject: SubjectInfo,
    ) -> Result<Self, GaitDataError> {
        let invalid = GaitDataError::InvalidTrajectory;
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return Err(invalid(format!("rate_hz must be positive, got {rate_hz}")));
        }
        subject.validate().map_err(invalid)?;
        if samples.is_empty() {
            return Err(invalid("trajectory has no samples".into()));
        }
        let dt = 1.0 / rate_hz;
        for (j, s) in samples.iter().enumerate() {
            if !(s.t.is_finite() && s.thigh_deg.is_finite() && s.knee_deg.is_finite()) {
                return Err(invalid(format!("sample {j} has a non-finite value")));
            }
            if !(s.ankle_z_mm.is_finite() && s.ankle_z_mm >= 0.0) {
                return Err(invalid(format!(
                    "sample {j} ankle_z_mm must be >= 0, got {}",
                    s.ankle_z_mm
                )));
            }
            if j > 0 {
                let step = s.t - samples[j - 1].t;
                if step <= 0.0 {
                    return Err(invalid(format!("timestamps not increasing at sample {j}")));
                }
                if (step - dt).abs() > SPACING_TOLERANCE_S {
                    return Err(invalid(format!(
                        "sample {j} spacing {step} deviates from 1/rate_hz = {dt}"
                    )));
                }
            }
        }
        Ok(Self {
            samples,
            rate_hz,
            subject,
            seed: None,
        })
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn samples(&self) -> &[GaitSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn subject(&self) -> &SubjectInfo {
        &self.subject
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn thigh(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.thigh_deg).collect()
    }

    pub fn knee(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.knee_deg).collect()
    }

    pub fn ankle_z(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.ankle_z_mm).collect()
    }
}

/// Round half up, for the non-negative lengths used throughout the crate.
pub(crate) fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Linear interpolation onto `target_len` uniformly spaced points spanning the
/// input. Both endpoints are reproduced exactly.
pub fn resample(seq: &[f64], target_len: usize) -> Result<Vec<f64>, GaitDataError> {
    if seq.len() < 2 {
        return Err(GaitDataError::TooShort { len: seq.len() });
    }
    if target_len < 2 {
        return Err(GaitDataError::TooShort { len: target_len });
    }
    let last = seq.len() - 1;
    let span = last as f64;
    let steps = (target_len - 1) as f64;
    Ok((0..target_len)
        .map(|j| {
            if j == target_len - 1 {
                return seq[last];
            }
            let pos = j as f64 * span / steps;
            let lo = pos.floor() as usize;
            if lo >= last {
                return seq[last];
            }
            let frac = pos - lo as f64;
            seq[lo] + (seq[lo + 1] - seq[lo]) * frac
        })
        .collect())
}

/// Linear interpolation of irregularly time-stamped values onto `target_len`
/// points spread uniformly between the first and last timestamp.
pub fn resample_timed(
    times: &[f64],
    values: &[f64],
    target_len: usize,
) -> Result<Vec<f64>, GaitDataError> {
    if times.len() != values.len() {
        return Err(GaitDataError::InvalidTrajectory(format!(
            "{} timestamps for {} values",
            times.len(),
            values.len()
        )));
    }
    if values.len() < 2 {
        return Err(GaitDataError::TooShort { len: values.len() });
    }
    if target_len < 2 {
        return Err(GaitDataError::TooShort { len: target_len });
    }
    let t0 = times[0];
    let t1 = times[times.len() - 1];
    let steps = (target_len - 1) as f64;
    let mut seg = 0;
    Ok((0..target_len)
        .map(|j| {
            if j == target_len - 1 {
                return values[values.len() - 1];
            }
            let t = t0 + (t1 - t0) * j as f64 / steps;
            while seg + 2 < times.len() && times[seg + 1] <= t {
                seg += 1;
            }
            let (ta, tb) = (times[seg], times[seg + 1]);
            let frac = if tb > ta { ((t - ta) / (tb - ta)).clamp(0.0, 1.0) } else { 0.0 };
            values[seg] + (values[seg + 1] - values[seg]) * frac
        })
        .collect())
}

/// Samples a timed curve at `t0, t0 + step, ...` up to its last timestamp,
/// interpolating linearly.
pub fn resample_step(times: &[f64], values: &[f64], step: f64) -> Result<Vec<f64>, GaitDataError> {
    if times.len() != values.len() {
        return Err(GaitDataError::InvalidTrajectory(format!(
            "{} timestamps for {} values",
            times.len(),
            values.len()
        )));
    }
    if values.is_empty() {
        return Err(GaitDataError::TooShort { len: 0 });
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(GaitDataError::InvalidConfig(format!("step must be positive, got {step}")));
    }
    let t0 = times[0];
    let span = times[times.len() - 1] - t0;
    let count = (span / step + 1e-9).floor() as usize + 1;
    let mut seg = 0;
    Ok((0..count)
        .map(|k| {
            if times.len() == 1 {
                return values[0];
            }
            let t = t0 + step * k as f64;
            while seg + 2 < times.len() && times[seg + 1] <= t {
                seg += 1;
            }
            let (ta, tb) = (times[seg], times[seg + 1]);
            let frac = if tb > ta { ((t - ta) / (tb - ta)).clamp(0.0, 1.0) } else { 0.0 };
            values[seg] + (values[seg + 1] - values[seg]) * frac
        })
        .collect())
}
