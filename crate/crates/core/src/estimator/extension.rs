//! Transition sequences prepended to the reference and the observation to
//! soften DTW edge effects.

use super::EstimatorError;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionParams {
    /// Oscillation amplitude of the sinusoidal transition, degrees.
    pub amplitude: f64,
    /// Exponential decay of the sinusoidal transition.
    pub decay_k: f64,
    pub num_cycles: f64,
    /// Exponential decay of the linear transition.
    pub lin_decay_c: f64,
    pub short_len: usize,
    pub long_len: usize,
}

impl ExtensionParams {
    pub fn validate(&self) -> Result<(), EstimatorError> {
        let ok = self.amplitude >= 0.0
            && self.decay_k >= 0.0
            && self.lin_decay_c >= 0.0
            && self.num_cycles >= 1.0
            && self.short_len >= 1
            && self.long_len >= 1;
        if ok {
            Ok(())
        } else {
            Err(EstimatorError::InvalidConfig(format!(
                "extension parameters out of range: {self:?}"
            )))
        }
    }
}

/// `b + A sin(2 pi t) e^(-k t)` sampled at `short_len` uniform points of
/// `t in [0, num_cycles]`, with `b` the first element of `seq`.
pub fn sinusoidal_transition(b: f64, p: &ExtensionParams) -> Vec<f64> {
    let l1 = p.short_len;
    (0..l1)
        .map(|j| {
            let t = if l1 > 1 {
                p.num_cycles * j as f64 / (l1 - 1) as f64
            } else {
                0.0
            };
            b + p.amplitude * (2.0 * PI * t).sin() * (-p.decay_k * t).exp()
        })
        .collect()
}

/// Average slope of the first four points: `((s2 - s1) + (s4 - s3)) / 2`.
pub fn initial_slope(seq: &[f64]) -> Result<f64, EstimatorError> {
    if seq.len() < 4 {
        return Err(EstimatorError::TooShort { len: seq.len(), needed: 4 });
    }
    Ok(((seq[1] - seq[0]) + (seq[3] - seq[2])) / 2.0)
}

/// `b - slop (x - 1) e^(-c x)` for `x = long_len, ..., 2, 1`, so that `x = 1`
/// sits next to the sequence.
pub fn linear_transition(b: f64, slop: f64, p: &ExtensionParams) -> Vec<f64> {
    (1..=p.long_len)
        .rev()
        .map(|x| {
            let x = x as f64;
            b - slop * (x - 1.0) * (-p.lin_decay_c * x).exp()
        })
        .collect()
}

/// Prepends the sinusoidal transition to `seq`.
pub fn extend_sinusoidal(seq: &[f64], p: &ExtensionParams) -> Result<Vec<f64>, EstimatorError> {
    let b = *seq.first().ok_or(EstimatorError::EmptySequence)?;
    let mut out = sinusoidal_transition(b, p);
    out.extend_from_slice(seq);
    Ok(out)
}

/// Prepends the linear transition to `seq`.
pub fn extend_linear(seq: &[f64], p: &ExtensionParams) -> Result<Vec<f64>, EstimatorError> {
    let slop = initial_slope(seq)?;
    let mut out = linear_transition(seq[0], slop, p);
    out.extend_from_slice(seq);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> ExtensionParams {
        ExtensionParams {
            amplitude: 1.0,
            decay_k: 0.0,
            num_cycles: 1.0,
            lin_decay_c: 0.0,
            short_len: 5,
            long_len: 5,
        }
    }

    #[test]
    fn zero_amplitude_repeats_baseline() {
        let p = ExtensionParams { amplitude: 0.0, short_len: 7, ..params() };
        let ext = extend_sinusoidal(&[3.5, 9.0], &p).unwrap();
        assert_eq!(&ext[..7], &[3.5; 7]);
        assert_eq!(&ext[7..], &[3.5, 9.0]);
    }

    #[test]
    fn sinusoid_grid_points() {
        let tr = sinusoidal_transition(0.0, &params());
        // t = 0, 0.25, 0.5, 0.75, 1
        assert_eq!(tr[0], 0.0);
        assert_eq!(tr[1], 1.0);
        assert!(tr[2].abs() < 1e-12);
        assert!((tr[3] + 1.0).abs() < 1e-12);
        assert!(tr[4].abs() < 1e-12);
    }

    #[test]
    fn linear_transition_plug_in() {
        let p = params();
        let tr = linear_transition(5.0, 1.0, &p);
        // x = 5, 4, 3, 2, 1
        assert_eq!(tr, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(*tr.last().unwrap(), 5.0);
    }

    #[test]
    fn flat_sequence_gives_flat_linear_extension() {
        let ext = extend_linear(&[5.0; 6], &ExtensionParams { long_len: 4, ..params() }).unwrap();
        assert_eq!(ext, vec![5.0; 10]);
    }

    #[test]
    fn slope_needs_four_points() {
        assert!(matches!(
            extend_linear(&[1.0, 2.0, 3.0], &params()),
            Err(EstimatorError::TooShort { len: 3, needed: 4 })
        ));
        assert_eq!(initial_slope(&[0.0, 1.0, 5.0, 8.0]).unwrap(), 2.0);
        assert!(matches!(extend_sinusoidal(&[], &params()), Err(EstimatorError::EmptySequence)));
    }

    proptest! {
        #[test]
        fn transitions_join_the_sequence_continuously(
            b in -40.0f64..40.0,
            amp in 0.0f64..15.0,
            k in 0.0f64..4.0,
            cycles in 1u32..4,
            len in 1usize..40,
            slop in -3.0f64..3.0,
            c in 0.0f64..2.0,
        ) {
            let p = ExtensionParams {
                amplitude: amp,
                decay_k: k,
                num_cycles: cycles as f64,
                lin_decay_c: c,
                short_len: len,
                long_len: len,
            };
            let sin = sinusoidal_transition(b, &p);
            prop_assert_eq!(sin.len(), len);
            let bound = (amp * (-k * cycles as f64).exp()).abs() + 1e-9;
            prop_assert!((sin[len - 1] - b).abs() <= bound);
            let lin = linear_transition(b, slop, &p);
            prop_assert_eq!(lin[len - 1], b);
        }
    }
}
