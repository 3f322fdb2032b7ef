//! Command-line configuration: defaults, overridden by a TOML file, overridden
//! by flags. Unknown keys are rejected.

use crate::estimator::EstimatorConfig;
use crate::evolution::{FitnessWeights, GaConfig, TimeCost};
use crate::gait_data::SyntheticGaitConfig;
use crate::harness::{LatencyModel, ReplayConfig, SweepConfig};
use crate::predictor::{FeatureConfig, TrainConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplaySection {
    pub rate_hz: f64,
    pub noise_std: f64,
    pub tolerance_pct: f64,
    pub latency: LatencyModel,
}

impl Default for ReplaySection {
    fn default() -> Self {
        Self {
            rate_hz: 100.0,
            noise_std: 0.0,
            tolerance_pct: 2.0,
            // Reproducible by default; `measured` charges real compute time.
            latency: LatencyModel::Fixed { ms: 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaSection {
    pub population: usize,
    pub elites: usize,
    pub generations: usize,
    pub crossover_ratio: f64,
    pub mutation_rate: f64,
    pub tournament: usize,
    pub weights: FitnessWeights,
    pub time_cost: TimeCost,
    pub progress_strides: usize,
    /// Replay rate for the progress term.
    pub progress_rate_hz: f64,
    /// Share of the data directory held out for scoring candidates.
    pub holdout_fraction: f64,
}

impl Default for GaSection {
    fn default() -> Self {
        let d = GaConfig::default();
        Self {
            population: d.population,
            elites: d.elites,
            generations: d.generations,
            crossover_ratio: d.crossover_ratio,
            mutation_rate: d.mutation_rate,
            tournament: d.tournament,
            weights: d.weights,
            time_cost: d.time_cost,
            progress_strides: d.progress_strides,
            progress_rate_hz: d.replay.rate_hz,
            holdout_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub seed: u64,
    pub synthetic: SyntheticGaitConfig,
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub estimator: EstimatorConfig,
    pub replay: ReplaySection,
    pub ga: GaSection,
    pub sweep: SweepConfig,
}

impl CliConfig {
    pub fn from_toml(text: &str, path: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.to_string(), message: e.to_string() })
    }

    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: shown.clone(), source })?;
        Self::from_toml(&text, &shown)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn replay_config(&self) -> ReplayConfig {
        ReplayConfig {
            rate_hz: self.replay.rate_hz,
            noise_std: self.replay.noise_std,
            rng_seed: self.seed,
            latency: self.replay.latency,
            tolerance_pct: self.replay.tolerance_pct,
            estimator: self.estimator.clone(),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { rng_seed: self.seed, ..self.train }
    }

    pub fn ga_config(&self) -> GaConfig {
        let g = &self.ga;
        GaConfig {
            population: g.population,
            elites: g.elites,
            generations: g.generations,
            crossover_ratio: g.crossover_ratio,
            mutation_rate: g.mutation_rate,
            tournament: g.tournament,
            weights: g.weights,
            time_cost: g.time_cost,
            rng_seed: self.seed,
            features: self.features,
            train: self.train,
            replay: ReplayConfig {
                rate_hz: g.progress_rate_hz,
                noise_std: 0.0,
                latency: LatencyModel::Fixed { ms: 0.0 },
                ..self.replay_config()
            },
            progress_strides: g.progress_strides,
        }
    }

    /// Checks every section, so a run fails before doing any work.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.synthetic.validate().map_err(|e| invalid(&e))?;
        self.features.validate().map_err(|e| invalid(&e))?;
        self.train.validate().map_err(|e| invalid(&e))?;
        self.replay_config().validate().map_err(|e| invalid(&e))?;
        self.ga_config().validate().map_err(|e| invalid(&e))?;
        crate::harness::noise_grid(&self.sweep).map_err(|e| invalid(&e))?;
        if !(self.ga.holdout_fraction > 0.0 && self.ga.holdout_fraction < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "ga.holdout_fraction must be in (0, 1), got {}",
                self.ga.holdout_fraction
            )));
        }
        Ok(())
    }
}
