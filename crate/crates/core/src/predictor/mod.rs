//! Feed-forward prediction of the crossing-stride thigh and knee trajectories
//! from the sound-ankle height curve, the pre-crossing thigh angle and the
//! leg length.

mod network;
mod train;

pub use network::{Activation, LayerKind, LayerSpec, Network, NetworkSpec, Tape};
pub use train::{train, Sample, TrainConfig, TrainHistory, MIN_DATASET};

use crate::gait_data::{resample, round_half_up, segment_stride, GaitDataError, GaitTrajectory, StrideSegments};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("{what} has length {got}, expected {expected}")]
    ShapeMismatch { what: &'static str, expected: usize, got: usize },
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("dataset has {got} examples, at least {needed} required")]
    DatasetTooSmall { got: usize, needed: usize },
    #[error("training diverged to a non-finite loss")]
    Diverged,
    #[error(transparent)]
    Data(#[from] GaitDataError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

/// Predicted joint angles over one crossing stride, in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionPair {
    pub thigh_pred: Vec<f64>,
    pub knee_pred: Vec<f64>,
}

impl PredictionPair {
    pub fn new(thigh_pred: Vec<f64>, knee_pred: Vec<f64>) -> Result<Self, PredictorError> {
        if thigh_pred.len() != knee_pred.len() {
            return Err(PredictorError::ShapeMismatch {
                what: "knee prediction",
                expected: thigh_pred.len(),
                got: knee_pred.len(),
            });
        }
        if thigh_pred.iter().chain(&knee_pred).any(|v| !v.is_finite()) {
            return Err(PredictorError::InvalidSpec("prediction is not finite".into()));
        }
        Ok(Self { thigh_pred, knee_pred })
    }

    /// Splits a raw network output, thigh channel first.
    pub fn from_output(out: &[f64]) -> Result<Self, PredictorError> {
        let half = out.len() / 2;
        Self::new(out[..half].to_vec(), out[half..].to_vec())
    }

    pub fn len(&self) -> usize {
        self.thigh_pred.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thigh_pred.is_empty()
    }
}

/// Runs `net` on one feature vector.
pub fn forward(net: &Network, input: &[f64]) -> Result<PredictionPair, PredictorError> {
    PredictionPair::from_output(&net.forward(input)?)
}

/// Shifts the knee prediction so it starts at `knee_at_event`, the knee angle
/// measured at the thigh-minimum event. The shift fades out linearly and is
/// gone at the sample 20% into the stride.
pub fn adjust_swing(pred: &PredictionPair, knee_at_event: f64) -> PredictionPair {
    let n = pred.knee_pred.len();
    let mut out = pred.clone();
    if n == 0 {
        return out;
    }
    let offset = knee_at_event - pred.knee_pred[0];
    let fade = round_half_up(0.2 * n as f64).max(1);
    for (j, v) in out.knee_pred.iter_mut().enumerate().take(fade) {
        *v += offset * (1.0 - j as f64 / fade as f64);
    }
    out
}

/// Parses hidden layers written as `kind:width:activation:dropout`, separated
/// by `|` or newlines, e.g. `dense:64:tanh:0.1|attention:16:relu:0`. Lines
/// starting with `#` are ignored.
pub fn parse_layers(desc: &str) -> Result<Vec<LayerSpec>, PredictorError> {
    let bad = |item: &str, why: &str| PredictorError::InvalidSpec(format!("layer `{item}`: {why}"));
    let mut layers = Vec::new();
    for line in desc.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        for item in line.split('|').map(str::trim).filter(|i| !i.is_empty()) {
            let parts: Vec<&str> = item.split(':').collect();
            let [kind, width, act, dropout] = parts.as_slice() else {
                return Err(bad(item, "expected kind:width:activation:dropout"));
            };
            let kind = match *kind {
                "dense" => LayerKind::Dense,
                "attention" => LayerKind::Attention,
                _ => return Err(bad(item, "kind must be dense or attention")),
            };
            let activation = match *act {
                "relu" => Activation::Relu,
                "tanh" => Activation::Tanh,
                "sigmoid" => Activation::Sigmoid,
                "identity" => Activation::Identity,
                _ => return Err(bad(item, "activation must be relu, tanh, sigmoid or identity")),
            };
            let width = width.parse().map_err(|_| bad(item, "width is not an integer"))?;
            let dropout = dropout.parse().map_err(|_| bad(item, "dropout is not a number"))?;
            layers.push(LayerSpec { kind, width, activation, dropout });
        }
    }
    if layers.is_empty() {
        return Err(PredictorError::InvalidSpec("no layers given".into()));
    }
    Ok(layers)
}

/// `hidden` followed by the dense identity layer that emits both trajectories.
pub fn spec_with_output(hidden: Vec<LayerSpec>, features: &FeatureConfig) -> NetworkSpec {
    let mut layers = hidden;
    layers.push(LayerSpec::dense(2 * features.trajectory_len, Activation::Identity));
    NetworkSpec { input_len: features.input_len(), trajectory_len: features.trajectory_len, layers }
}

/// Lengths of the resampled network inputs and outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub ankle_len: usize,
    pub pre_len: usize,
    pub trajectory_len: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { ankle_len: 50, pre_len: 20, trajectory_len: 100 }
    }
}

impl FeatureConfig {
    /// Ankle curve, pre-crossing thigh angle, leg length in metres.
    pub fn input_len(&self) -> usize {
        self.ankle_len + self.pre_len + 1
    }

    pub fn validate(&self) -> Result<(), PredictorError> {
        if self.ankle_len < 2 || self.pre_len < 2 || self.trajectory_len < 2 {
            return Err(PredictorError::InvalidConfig("feature lengths must be at least 2".into()));
        }
        Ok(())
    }

    pub fn features(&self, ankle: &[f64], pre_angle: &[f64], leg_length_cm: f64) -> Result<Vec<f64>, PredictorError> {
        let mut x = resample_any(ankle, self.ankle_len)?;
        x.extend(resample_any(pre_angle, self.pre_len)?);
        x.push(leg_length_cm / 100.0);
        Ok(x)
    }
}

/// Like `resample`, but a single value is repeated.
fn resample_any(seq: &[f64], len: usize) -> Result<Vec<f64>, GaitDataError> {
    match seq {
        [v] => Ok(vec![*v; len]),
        _ => resample(seq, len),
    }
}

/// One segmented crossing stride as a training or evaluation example.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Vec<f64>,
    pub thigh: Vec<f64>,
    pub knee: Vec<f64>,
    /// Knee angle at the thigh-minimum event.
    pub knee_at_event: f64,
    pub segments: StrideSegments,
}

impl Example {
    pub fn from_segments(seg: StrideSegments, leg_length_cm: f64, fc: &FeatureConfig) -> Result<Self, PredictorError> {
        Ok(Self {
            input: fc.features(&seg.ankle_height, &seg.pre_angle, leg_length_cm)?,
            thigh: resample(&seg.thigh(), fc.trajectory_len)?,
            knee: resample(&seg.knee(), fc.trajectory_len)?,
            knee_at_event: seg.angle[0].1,
            segments: seg,
        })
    }

    pub fn from_trajectory(traj: &GaitTrajectory, fc: &FeatureConfig) -> Result<Self, PredictorError> {
        let seg = segment_stride(traj, 0)?;
        Self::from_segments(seg, traj.subject().leg_length_cm, fc)
    }
}

fn mean_scale(rows: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len().max(1) as f64;
    let dim = rows.first().map_or(0, |r| r.len());
    let mean: Vec<f64> = (0..dim).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n).collect();
    let scale = (0..dim)
        .map(|k| {
            let sd = (rows.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / n).sqrt();
            if sd > 1e-9 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

/// A network plus the feature layout and the normalisation it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    features: FeatureConfig,
    network: Network,
    x_mean: Vec<f64>,
    x_scale: Vec<f64>,
    y_mean: Vec<f64>,
    /// One scale per channel, so the curve shape is not distorted.
    y_scale: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct PredictorFile {
    format: String,
    version: u32,
    features: FeatureConfig,
    spec: NetworkSpec,
    x_mean: Vec<f64>,
    x_scale: Vec<f64>,
    y_mean: Vec<f64>,
    y_scale: [f64; 2],
    params: Vec<f64>,
}

const FORMAT: &str = "stridephase-predictor";
const VERSION: u32 = 1;

impl Predictor {
    /// Normalises the examples, trains a network of shape `spec` and keeps the
    /// best validation snapshot.
    pub fn fit(
        spec: NetworkSpec,
        features: FeatureConfig,
        examples: &[Example],
        cfg: &TrainConfig,
    ) -> Result<(Self, TrainHistory), PredictorError> {
        features.validate()?;
        if spec.input_len != features.input_len() || spec.trajectory_len != features.trajectory_len {
            return Err(PredictorError::InvalidSpec(format!(
                "spec maps {} -> 2x{}, features need {} -> 2x{}",
                spec.input_len,
                spec.trajectory_len,
                features.input_len(),
                features.trajectory_len
            )));
        }
        if examples.len() < MIN_DATASET {
            return Err(PredictorError::DatasetTooSmall { got: examples.len(), needed: MIN_DATASET });
        }
        let xs: Vec<&[f64]> = examples.iter().map(|e| e.input.as_slice()).collect();
        let (x_mean, x_scale) = mean_scale(&xs);
        let ys: Vec<Vec<f64>> = examples.iter().map(|e| [e.thigh.clone(), e.knee.clone()].concat()).collect();
        let yr: Vec<&[f64]> = ys.iter().map(|y| y.as_slice()).collect();
        let (y_mean, _) = mean_scale(&yr);
        let t = features.trajectory_len;
        let channel_scale = |lo: usize| {
            let n = (ys.len() * t) as f64;
            let ss: f64 = ys.iter().map(|y| (lo..lo + t).map(|k| (y[k] - y_mean[k]).powi(2)).sum::<f64>()).sum();
            let sd = (ss / n).sqrt();
            if sd > 1e-9 {
                sd
            } else {
                1.0
            }
        };
        let y_scale = [channel_scale(0), channel_scale(t)];
        let mut p = Self {
            features,
            network: Network::random(spec, cfg.rng_seed)?,
            x_mean,
            x_scale,
            y_mean,
            y_scale,
        };
        let samples: Vec<Sample> = examples
            .iter()
            .zip(&ys)
            .map(|(e, y)| Sample { input: p.normalise_input(&e.input), target: p.normalise_target(y) })
            .collect();
        let (net, hist) = train(p.network.clone(), &samples, cfg)?;
        p.network = net;
        Ok((p, hist))
    }

    fn normalise_input(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.x_mean).zip(&self.x_scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    fn normalise_target(&self, y: &[f64]) -> Vec<f64> {
        let t = self.features.trajectory_len;
        y.iter().enumerate().map(|(k, v)| (v - self.y_mean[k]) / self.y_scale[k / t]).collect()
    }

    pub fn features(&self) -> &FeatureConfig {
        &self.features
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    /// Prediction from a raw feature vector, see [`FeatureConfig::features`].
    pub fn predict(&self, input: &[f64]) -> Result<PredictionPair, PredictorError> {
        if input.len() != self.features.input_len() {
            return Err(PredictorError::ShapeMismatch {
                what: "feature vector",
                expected: self.features.input_len(),
                got: input.len(),
            });
        }
        let t = self.features.trajectory_len;
        let out = self.network.forward(&self.normalise_input(input))?;
        let y: Vec<f64> = out.iter().enumerate().map(|(k, v)| v * self.y_scale[k / t] + self.y_mean[k]).collect();
        PredictionPair::from_output(&y)
    }

    pub fn predict_example(&self, ex: &Example) -> Result<PredictionPair, PredictorError> {
        self.predict(&ex.input)
    }

    pub fn to_json(&self) -> String {
        let file = PredictorFile {
            format: FORMAT.into(),
            version: VERSION,
            features: self.features,
            spec: self.network.spec().clone(),
            x_mean: self.x_mean.clone(),
            x_scale: self.x_scale.clone(),
            y_mean: self.y_mean.clone(),
            y_scale: self.y_scale,
            params: self.network.params().to_vec(),
        };
        serde_json::to_string_pretty(&file).expect("plain data serialises")
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self, PredictorError> {
        let format = |message: String| PredictorError::Format { path: path.to_path_buf(), message };
        let f: PredictorFile = serde_json::from_str(text).map_err(|e| format(e.to_string()))?;
        if f.format != FORMAT || f.version != VERSION {
            return Err(format(format!("unsupported weight file {} v{}", f.format, f.version)));
        }
        f.features.validate()?;
        let (i, o) = (f.features.input_len(), 2 * f.features.trajectory_len);
        if f.x_mean.len() != i || f.x_scale.len() != i || f.y_mean.len() != o {
            return Err(format("normalisation vectors do not match the feature layout".into()));
        }
        if f.spec.input_len != i || f.spec.trajectory_len != f.features.trajectory_len {
            return Err(format("network shape does not match the feature layout".into()));
        }
        Ok(Self {
            features: f.features,
            network: Network::from_params(f.spec, f.params)?,
            x_mean: f.x_mean,
            x_scale: f.x_scale,
            y_mean: f.y_mean,
            y_scale: f.y_scale,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), PredictorError> {
        std::fs::write(path, self.to_json() + "\n")
            .map_err(|source| PredictorError::Io { path: path.to_path_buf(), source })
    }

    pub fn load(path: &Path) -> Result<Self, PredictorError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| PredictorError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text, path)
    }
}
