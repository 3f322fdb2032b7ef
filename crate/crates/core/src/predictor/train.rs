use super::{Network, PredictorError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub validation_fraction: f64,
    /// Epochs without a new best validation loss before stopping.
    pub patience_epochs: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            validation_fraction: 0.35,
            patience_epochs: 60,
            max_epochs: 300,
            learning_rate: 0.05,
            batch_size: 8,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PredictorError> {
        let bad = |m: String| Err(PredictorError::InvalidConfig(m));
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad(format!("validation_fraction must be in (0, 1), got {}", self.validation_fraction));
        }
        if self.patience_epochs == 0 || self.max_epochs == 0 || self.batch_size == 0 {
            return bad("patience_epochs, max_epochs and batch_size must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        Ok(())
    }
}

/// One training pair in network units.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// 1-based epoch of the returned snapshot.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub epochs_run: usize,
}

pub const MIN_DATASET: usize = 10;

/// Mini-batch gradient descent on the mean squared error with early stopping.
/// Returns the snapshot with the lowest validation loss.
pub fn train(
    net: Network,
    data: &[Sample],
    cfg: &TrainConfig,
) -> Result<(Network, TrainHistory), PredictorError> {
    cfg.validate()?;
    if data.len() < MIN_DATASET {
        return Err(PredictorError::DatasetTooSmall { got: data.len(), needed: MIN_DATASET });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((cfg.validation_fraction * data.len() as f64).round() as usize).clamp(1, data.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();

    let val_x: Vec<&[f64]> = val_idx.iter().map(|&i| data[i].input.as_slice()).collect();
    let val_y: Vec<&[f64]> = val_idx.iter().map(|&i| data[i].target.as_slice()).collect();
    let val_loss = |net: &Network| net.mse_and_grad(&val_x, &val_y, None).map(|r| r.0);

    let mut net = net;
    let mut best = net.clone();
    let mut hist = TrainHistory { best_val_loss: f64::INFINITY, ..Default::default() };
    let mut stale = 0;
    for epoch in 1..=cfg.max_epochs {
        train_idx.shuffle(&mut rng);
        let mut sum = 0.0;
        for batch in train_idx.chunks(cfg.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| data[i].input.as_slice()).collect();
            let ys: Vec<&[f64]> = batch.iter().map(|&i| data[i].target.as_slice()).collect();
            let (loss, grad) = net.mse_and_grad(&xs, &ys, Some(&mut rng))?;
            sum += loss * batch.len() as f64;
            for (p, g) in net.params_mut().iter_mut().zip(&grad) {
                *p -= cfg.learning_rate * g;
            }
        }
        let v = val_loss(&net)?;
        hist.train_loss.push(sum / train_idx.len() as f64);
        hist.val_loss.push(v);
        hist.epochs_run = epoch;
        if v < hist.best_val_loss {
            hist.best_val_loss = v;
            hist.best_epoch = epoch;
            best = net.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience_epochs {
                break;
            }
        }
        if !v.is_finite() {
            break;
        }
    }
    if !hist.best_val_loss.is_finite() {
        return Err(PredictorError::Diverged);
    }
    Ok((best, hist))
}
