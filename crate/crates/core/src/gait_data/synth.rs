use super::{GaitDataError, GaitSample, GaitTrajectory, SubjectInfo};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Shape controls of the synthetic gait. Phases are fractions of the whole
/// two-stride session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapeParams {
    /// Thigh flexion above the standing baseline at the lowest obstacle.
    pub peak_thigh_deg: f64,
    /// Knee flexion above the baseline at the lowest obstacle.
    pub peak_knee_deg: f64,
    /// Session phase of the thigh minimum that opens the crossing stride.
    pub thigh_min_phase: f64,
    /// Session-phase span from the thigh minimum to the knee minimum.
    pub crossing_span: f64,
}

impl Default for ShapeParams {
    fn default() -> Self {
        Self {
            peak_thigh_deg: 30.0,
            peak_knee_deg: 70.0,
            thigh_min_phase: 0.46,
            crossing_span: 0.42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticGaitConfig {
    pub obstacle_height_mm: f64,
    pub foot_distance_mm: f64,
    /// Duration of each of the two generated strides.
    pub stride_duration_s: f64,
    pub rate_hz: f64,
    pub seed: u64,
    pub subject: SubjectInfo,
    pub shape: ShapeParams,
}

impl Default for SyntheticGaitConfig {
    fn default() -> Self {
        Self {
            obstacle_height_mm: 200.0,
            foot_distance_mm: 200.0,
            stride_duration_s: 1.2,
            rate_hz: 100.0,
            seed: 0,
            subject: SubjectInfo::default(),
            shape: ShapeParams::default(),
        }
    }
}

impl SyntheticGaitConfig {
    /// Obstacle height, foot distance, stride duration and leg length drawn
    /// uniformly from their working ranges.
    pub fn varied(seed: u64, rate_hz: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::seeds::derive(seed, &[0x5e55]));
        let leg: f64 = rng.random_range(80.0..95.0);
        Self {
            obstacle_height_mm: rng.random_range(150.0..300.0),
            foot_distance_mm: rng.random_range(100.0..300.0),
            stride_duration_s: rng.random_range(1.0..1.4),
            rate_hz,
            seed,
            subject: SubjectInfo { leg_length_cm: leg, height_cm: leg / 0.51, ..SubjectInfo::default() },
            shape: ShapeParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), GaitDataError> {
        let bad = |m: String| Err(GaitDataError::InvalidConfig(m));
        if !(150.0..=300.0).contains(&self.obstacle_height_mm) {
            return bad(format!(
                "obstacle_height_mm must be in [150, 300], got {}",
                self.obstacle_height_mm
            ));
        }
        if !(100.0..=300.0).contains(&self.foot_distance_mm) {
            return bad(format!(
                "foot_distance_mm must be in [100, 300], got {}",
                self.foot_distance_mm
            ));
        }
        if !(0.4..=4.0).contains(&self.stride_duration_s) {
            return bad(format!(
                "stride_duration_s must be in [0.4, 4], got {}",
                self.stride_duration_s
            ));
        }
        if !(10.0..=1000.0).contains(&self.rate_hz) {
            return bad(format!("rate_hz must be in [10, 1000], got {}", self.rate_hz));
        }
        let n = (2.0 * self.stride_duration_s * self.rate_hz).round();
        if n < 40.0 {
            return bad(format!("session would have only {n} samples, need at least 40"));
        }
        self.subject.validate().map_err(GaitDataError::InvalidConfig)?;
        let s = &self.shape;
        if !(s.peak_thigh_deg > 0.0 && s.peak_knee_deg > 0.0) {
            return bad("peak flexion angles must be positive".into());
        }
        if !(0.4..=0.55).contains(&s.thigh_min_phase) {
            return bad(format!(
                "thigh_min_phase must be in [0.4, 0.55], got {}",
                s.thigh_min_phase
            ));
        }
        if !(0.3..=0.45).contains(&s.crossing_span) {
            return bad(format!(
                "crossing_span must be in [0.3, 0.45], got {}",
                s.crossing_span
            ));
        }
        Ok(())
    }
}

/// Raised-cosine pulse of unit height centred on `centre`, zero outside
/// `centre ± half_width`.
fn pulse(u: f64, centre: f64, half_width: f64) -> f64 {
    let d = (u - centre) / half_width;
    if d.abs() >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (PI * d).cos())
    }
}

/// Generates a pre-crossing stride followed by an obstacle-crossing stride.
///
/// Each signal is a baseline plus raised-cosine pulses. The seed drives a small
/// per-session variation: an effort factor shared by sound-ankle clearance and
/// knee flexion, a style factor visible in the pre-crossing thigh extension,
/// and a timing jitter.
pub fn generate_synthetic(cfg: &SyntheticGaitConfig) -> Result<GaitTrajectory, GaitDataError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let effort: f64 = rng.random_range(-1.0..1.0);
    let style: f64 = rng.random_range(-1.0..1.0);
    let timing: f64 = rng.random_range(-1.0..1.0);

    let h = (cfg.obstacle_height_mm - 150.0) / 150.0;
    let d = (cfg.foot_distance_mm - 100.0) / 200.0;
    let leg = (87.0 / cfg.subject.leg_length_cm).sqrt();
    let shape = &cfg.shape;

    let ua = shape.thigh_min_phase + 0.01 * timing;
    let ub = ua + shape.crossing_span;

    let thigh_base = 10.0;
    let thigh_dip = (18.0 + 6.0 * d) * (1.0 + 0.05 * style) * leg;
    let thigh_peak = (shape.peak_thigh_deg + 12.0 * h) * (1.0 + 0.02 * style) * leg;
    let thigh_peak_at = ua + 0.26 + 0.03 * d;

    let knee_base = 6.0;
    let knee_peak = (shape.peak_knee_deg + 25.0 * h) * (1.0 + 0.04 * effort) * leg;
    let knee_peak_at = ua + 0.17 + 0.02 * d;

    let ankle_base = 70.0;
    let ankle_peak = cfg.obstacle_height_mm + 60.0 + 10.0 * effort;
    let ankle_at = 0.26 + 0.04 * d;

    let n = (2.0 * cfg.stride_duration_s * cfg.rate_hz).round() as usize;
    let total = n as f64 / cfg.rate_hz;
    // Keep the ankle dips a few samples wide so they survive smoothing.
    let dip_hw = (3.0 / n as f64).max(0.04);
    let samples = (0..n)
        .map(|j| {
            let t = j as f64 / cfg.rate_hz;
            let u = t / total;
            let thigh = thigh_base + 12.0 * pulse(u, 0.0, 0.12) - thigh_dip * pulse(u, ua, 0.35)
                + thigh_peak * pulse(u, thigh_peak_at, 0.24);
            let knee = knee_base + 45.0 * leg * pulse(u, 0.08, 0.1)
                + knee_peak * pulse(u, knee_peak_at, 0.28)
                - 5.0 * pulse(u, ub, 0.07);
            let ankle = ankle_base + ankle_peak * pulse(u, ankle_at, 0.12)
                - 6.0 * pulse(u, ankle_at - 0.13, dip_hw)
                - 6.0 * pulse(u, ankle_at + 0.13, dip_hw);
            GaitSample {
                t,
                thigh_deg: thigh,
                knee_deg: knee,
                ankle_z_mm: ankle,
            }
        })
        .collect();
    Ok(GaitTrajectory::new(samples, cfg.rate_hz, cfg.subject)?.with_seed(Some(cfg.seed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait_data::segment_stride;

    #[test]
    fn deterministic_for_fixed_seed() {
        let cfg = SyntheticGaitConfig { seed: 42, ..Default::default() };
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(a, b);
        let bits = |t: &GaitTrajectory| -> Vec<u64> {
            t.samples().iter().map(|s| s.knee_deg.to_bits()).collect()
        };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn two_strides_of_1_2_s_at_100_hz_give_240_samples() {
        let cfg = SyntheticGaitConfig { rate_hz: 100.0, stride_duration_s: 1.2, ..Default::default() };
        assert_eq!(generate_synthetic(&cfg).unwrap().len(), 240);
    }

    #[test]
    fn higher_obstacle_means_more_knee_flexion() {
        for seed in 0..5 {
            let peak = |h: f64| {
                let cfg = SyntheticGaitConfig { obstacle_height_mm: h, seed, ..Default::default() };
                generate_synthetic(&cfg)
                    .unwrap()
                    .knee()
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            assert!(peak(300.0) > peak(150.0));
            assert!(peak(225.0) > peak(150.0));
        }
    }

    #[test]
    fn out_of_range_config_is_rejected() {
        for cfg in [
            SyntheticGaitConfig { obstacle_height_mm: 149.0, ..Default::default() },
            SyntheticGaitConfig { foot_distance_mm: 301.0, ..Default::default() },
            SyntheticGaitConfig { rate_hz: 0.0, ..Default::default() },
        ] {
            assert!(matches!(generate_synthetic(&cfg), Err(GaitDataError::InvalidConfig(_))));
        }
    }

    #[test]
    fn short_and_long_strides_segment_at_every_rate() {
        for rate in [25.0, 50.0, 100.0, 150.0] {
            for dur in [0.8, 0.85, 1.0, 1.2, 1.5, 2.0, 3.0] {
                for seed in 0..4u64 {
                    let cfg = SyntheticGaitConfig {
                        stride_duration_s: dur,
                        rate_hz: rate,
                        seed,
                        ..Default::default()
                    };
                    let traj = generate_synthetic(&cfg).unwrap();
                    segment_stride(&traj, 0)
                        .unwrap_or_else(|e| panic!("rate {rate} duration {dur} seed {seed}: {e}"));
                }
            }
        }
    }

    #[test]
    fn too_few_samples_is_rejected() {
        let cfg = SyntheticGaitConfig { stride_duration_s: 0.5, rate_hz: 25.0, ..Default::default() };
        assert!(matches!(generate_synthetic(&cfg), Err(GaitDataError::InvalidConfig(_))));
    }

    #[test]
    fn generated_sessions_segment_cleanly() {
        for (k, rate) in [25.0, 50.0, 100.0, 150.0].into_iter().enumerate() {
            for seed in 0..6u64 {
                let cfg = SyntheticGaitConfig {
                    obstacle_height_mm: 150.0 + 30.0 * seed as f64,
                    foot_distance_mm: 100.0 + 40.0 * seed as f64,
                    stride_duration_s: 1.0 + 0.08 * seed as f64,
                    rate_hz: rate,
                    seed: seed + 10 * k as u64,
                    ..Default::default()
                };
                let traj = generate_synthetic(&cfg).unwrap();
                let seg = segment_stride(&traj, 0).unwrap();
                let frac = seg.len() as f64 / traj.len() as f64;
                let slack = 2.0 / traj.len() as f64;
                assert!((0.38 - slack..0.47 + slack).contains(&frac), "rate {rate} seed {seed}: {frac}");
                assert!(seg.ankle_end_idx < seg.thigh_min_idx);
                let ankle_peak = seg.ankle_height.iter().cloned().fold(0.0, f64::max);
                assert!(ankle_peak > cfg.obstacle_height_mm);
            }
        }
    }
}
