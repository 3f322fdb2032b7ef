//! Obstacle-crossing control pipeline for powered transfemoral prostheses.
//!
//! The crate covers the whole offline toolchain:
//!
//! * [`gait_data`]: trajectories, stride segmentation, resampling, a synthetic
//!   gait generator and the trajectory CSV format.
//! * [`dtw`]: plain univariate dynamic time warping plus a brute-force oracle.
//! * [`estimator`]: the streaming gait-phase-progress estimator that matches the
//!   observed thigh angle against a predicted reference.
//! * [`predictor`]: a small feed-forward network predicting thigh and knee
//!   trajectories from the sound-ankle height and the pre-crossing thigh angle.
//! * [`evolution`]: genetic search over network architectures.
//! * [`harness`]: latency-aware streaming replay, noise injection and metrics.
//! * [`cli`] and [`config`]: the `stridephase` command line and its TOML
//!   configuration.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dtw;
pub mod estimator;
pub mod evolution;
pub mod gait_data;
pub mod harness;
pub mod predictor;

mod numfmt;
mod seeds;

pub use dtw::{dtw_brute_force, dtw_distance, DtwError, WarpPath};
pub use estimator::{
    EstimatorConfig, EstimatorError, EstimatorSession, ExtensionMode, ExtensionParams,
    ProgressEstimate, ReferenceSequence, TransformBounds, TransformParams, UpdateOutcome,
};
pub use gait_data::{
    generate_synthetic, load_trajectory, resample, save_trajectory, segment_stride,
    GaitDataError, GaitSample, GaitTrajectory, StrideSegments, SubjectInfo, SyntheticGaitConfig,
};
pub use evolution::{evolve, EvolutionData, EvolutionResult, GaConfig, Genome};
pub use harness::{
    add_gaussian_noise, compute_metrics, noise_sweep, replay, LatencyModel, NoiseSweepReport,
    ReplayConfig, RunMetrics,
};
pub use predictor::{
    adjust_swing, Activation, Example, FeatureConfig, LayerKind, LayerSpec, Network, NetworkSpec, PredictionPair,
    Predictor, PredictorError, TrainConfig,
};
