use super::{replay, HarnessError, ReplayConfig};
use crate::gait_data::GaitTrajectory;
use crate::numfmt::sig9;
use crate::predictor::PredictionPair;
use crate::seeds::derive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub std_min: f64,
    pub std_step: f64,
    pub std_max: f64,
    /// Noise draws per level and session.
    pub repeats: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { std_min: 0.05, std_step: 0.025, std_max: 3.0, repeats: 1 }
    }
}

/// `std_min + k * std_step` for every k that stays at or below `std_max`.
pub fn noise_grid(cfg: &SweepConfig) -> Result<Vec<f64>, HarnessError> {
    if !(cfg.std_min >= 0.0 && cfg.std_step > 0.0 && cfg.std_max >= cfg.std_min) {
        return Err(HarnessError::InvalidConfig(format!(
            "need 0 <= std_min <= std_max and std_step > 0, got {} / {} / {}",
            cfg.std_min, cfg.std_step, cfg.std_max
        )));
    }
    if cfg.repeats == 0 {
        return Err(HarnessError::InvalidConfig("repeats must be >= 1".into()));
    }
    let count = ((cfg.std_max - cfg.std_min) / cfg.std_step + 1e-9).floor() as usize + 1;
    // Rounded so that printed levels read 0.075 rather than 0.07500000000000001.
    Ok((0..count).map(|k| ((cfg.std_min + k as f64 * cfg.std_step) * 1e12).round() / 1e12).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub noise_std: f64,
    /// Mean over sessions and repeats of the per-run progress RMSE.
    pub progress_rmse_pct: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweepReport {
    pub rows: Vec<SweepRow>,
}

impl NoiseSweepReport {
    /// `noise_std,progress_rmse_pct,accuracy`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("noise_std,progress_rmse_pct,accuracy\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", sig9(r.noise_std), sig9(r.progress_rmse_pct), sig9(r.accuracy)));
        }
        out
    }
}

pub fn noise_sweep(
    traj: &GaitTrajectory,
    reference: &PredictionPair,
    base: &ReplayConfig,
    sweep: &SweepConfig,
) -> Result<NoiseSweepReport, HarnessError> {
    noise_sweep_many(&[(traj.clone(), reference.clone())], base, sweep)
}

/// Replays every session at every noise level. A run's noise seed depends on
/// the base seed, the session and the repeat, so every level scales the same
/// draws and rows can be computed in any order.
pub fn noise_sweep_many(
    cases: &[(GaitTrajectory, PredictionPair)],
    base: &ReplayConfig,
    sweep: &SweepConfig,
) -> Result<NoiseSweepReport, HarnessError> {
    base.validate()?;
    let grid = noise_grid(sweep)?;
    if cases.is_empty() {
        return Err(HarnessError::InvalidConfig("noise sweep needs at least one session".into()));
    }
    let rows = grid
        .par_iter()
        .map(|&std| {
            let mut rmse = 0.0;
            let mut acc = 0.0;
            let mut n = 0.0;
            for (c, (traj, reference)) in cases.iter().enumerate() {
                for r in 0..sweep.repeats {
                    let cfg = ReplayConfig {
                        noise_std: std,
                        rng_seed: derive(base.rng_seed, &[c as u64, r as u64]),
                        ..base.clone()
                    };
                    let m = replay(traj, reference, &cfg)?.metrics;
                    rmse += m.progress_rmse_pct;
                    acc += m.progress_accuracy;
                    n += 1.0;
                }
            }
            Ok(SweepRow { noise_std: std, progress_rmse_pct: rmse / n, accuracy: acc / n })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(NoiseSweepReport { rows })
}
