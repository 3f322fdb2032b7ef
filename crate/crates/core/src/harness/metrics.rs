use super::HarnessError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleMetrics {
    /// RMSE over the truth's range, in percent.
    pub rmse_pct: f64,
    pub pearson: f64,
}

/// Pearson correlation. A constant input has no defined correlation and
/// yields 0.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}

pub fn compute_metrics(pred: &[f64], truth: &[f64]) -> Result<AngleMetrics, HarnessError> {
    if pred.len() != truth.len() || truth.len() < 2 {
        return Err(HarnessError::LengthMismatch(pred.len(), truth.len()));
    }
    let hi = truth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = truth.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi - lo <= 0.0 {
        return Err(HarnessError::DegenerateRange);
    }
    let mse = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / truth.len() as f64;
    Ok(AngleMetrics { rmse_pct: 100.0 * mse.sqrt() / (hi - lo), pearson: pearson(pred, truth) })
}
