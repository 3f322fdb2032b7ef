use super::*;
use crate::gait_data::{generate_synthetic, SyntheticGaitConfig};

fn fixed(rate_hz: f64, ms: f64) -> ReplayConfig {
    ReplayConfig { rate_hz, latency: LatencyModel::Fixed { ms }, ..Default::default() }
}

fn session(seed: u64, rate_hz: f64) -> (GaitTrajectory, PredictionPair) {
    let traj = generate_synthetic(&SyntheticGaitConfig::varied(seed, rate_hz)).unwrap();
    let reference = ground_truth_reference(&traj, 100).unwrap();
    (traj, reference)
}

#[test]
fn zero_std_leaves_sequence_alone() {
    let x = [1.0, -2.0, 3.5];
    assert_eq!(add_gaussian_noise(&x, 0.0, 9), x.to_vec());
}

#[test]
fn unit_noise_moments() {
    let zeros = vec![0.0; 1_000_000];
    let noise = add_gaussian_noise(&zeros, 1.0, 42);
    let n = noise.len() as f64;
    let mean = noise.iter().sum::<f64>() / n;
    let sd = (noise.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    assert!(mean.abs() < 0.01, "mean {mean}");
    assert!((sd - 1.0).abs() < 0.01, "std {sd}");
    assert_eq!(noise, add_gaussian_noise(&zeros, 1.0, 42));
}

#[test]
fn metrics_of_exact_and_mirrored_predictions() {
    let truth: Vec<f64> = (0..20).map(|j| (j as f64 * 0.4).sin()).collect();
    let m = compute_metrics(&truth, &truth).unwrap();
    assert_eq!(m.rmse_pct, 0.0);
    assert!((m.pearson - 1.0).abs() < 1e-12);
    let centred: Vec<f64> = truth.iter().map(|v| v - truth.iter().sum::<f64>() / 20.0).collect();
    let mirrored: Vec<f64> = centred.iter().map(|v| -v).collect();
    assert!((compute_metrics(&mirrored, &centred).unwrap().pearson + 1.0).abs() < 1e-12);
}

#[test]
fn metrics_match_hand_computed_values() {
    let p = [1.0, 2.5, 3.1, -0.4, 7.0, 5.5, 2.2, 0.0, 9.3, 4.4];
    let t = [1.2, 2.0, 3.5, 0.1, 6.1, 5.9, 2.0, -0.5, 8.8, 4.0];
    let m = compute_metrics(&p, &t).unwrap();
    assert!((m.rmse_pct - 5.234693094467995).abs() < 1e-9, "{}", m.rmse_pct);
    assert!((m.pearson - 0.9886093988210896).abs() < 1e-9, "{}", m.pearson);
}

#[test]
fn constant_truth_is_degenerate() {
    assert!(matches!(compute_metrics(&[1.0, 2.0], &[3.0, 3.0]), Err(HarnessError::DegenerateRange)));
    assert!(matches!(compute_metrics(&[1.0], &[3.0]), Err(HarnessError::LengthMismatch(1, 1))));
}

#[test]
fn paper_noise_grid_has_119_levels() {
    let g = noise_grid(&SweepConfig::default()).unwrap();
    assert_eq!(g.len(), 119);
    assert_eq!(g[0], 0.05);
    assert_eq!(g[1], 0.075);
    assert_eq!(*g.last().unwrap(), 3.0);
    assert!(g.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn self_match_without_noise_is_accurate() {
    let (traj, reference) = session(3, 100.0);
    let out = replay(&traj, &reference, &fixed(100.0, 0.0)).unwrap();
    assert_eq!(out.metrics.progress_accuracy, 1.0, "{:?}", out.metrics);
    assert_eq!(out.metrics.thigh_rmse_pct, 0.0);
    assert_eq!(out.metrics.samples, out.metrics.updates);
}

#[test]
fn replay_is_deterministic() {
    let (traj, reference) = session(4, 50.0);
    let cfg = ReplayConfig { noise_std: 1.0, rng_seed: 8, ..fixed(50.0, 5.0) };
    let a = replay(&traj, &reference, &cfg).unwrap();
    let b = replay(&traj, &reference, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.steps_csv(), b.steps_csv());
}

#[test]
fn slow_estimator_sees_newest_samples_in_order() {
    let (traj, reference) = session(5, 100.0);
    // 25 ms per update at a 10 ms clock: a new sample every 2.5 ticks on average.
    let out = replay(&traj, &reference, &fixed(100.0, 25.0)).unwrap();
    let m = out.metrics;
    assert!(m.updates < m.samples / 2, "{} of {}", m.updates, m.samples);
    let ticks: Vec<i64> = out.steps.iter().map(|s| (s.t * 100.0).round() as i64).collect();
    assert!(ticks.windows(2).all(|w| w[1] > w[0]));
    // The final sample is taken whenever it is reached.
    for w in ticks[..ticks.len() - 1].windows(2) {
        assert!((2..=3).contains(&(w[1] - w[0])), "{ticks:?}");
    }
}

#[test]
fn clock_resamples_a_faster_recording() {
    let (traj, reference) = session(6, 150.0);
    let out = replay(&traj, &reference, &fixed(50.0, 0.0)).unwrap();
    assert!(out.steps.windows(2).all(|w| ((w[1].t - w[0].t) * 50.0 - 1.0).abs() < 1e-9));
    assert_eq!(out.metrics.progress_accuracy, 1.0, "{:?}", out.metrics);
}

#[test]
fn rate_outside_band_is_rejected() {
    let (traj, reference) = session(1, 100.0);
    assert!(matches!(replay(&traj, &reference, &fixed(200.0, 0.0)), Err(HarnessError::InvalidConfig(_))));
}

#[test]
fn sweep_rows_follow_grid() {
    let (traj, reference) = session(2, 50.0);
    let sweep = SweepConfig { std_min: 0.5, std_step: 1.0, std_max: 2.5, repeats: 2 };
    let rep = noise_sweep(&traj, &reference, &fixed(50.0, 0.0), &sweep).unwrap();
    let stds: Vec<f64> = rep.rows.iter().map(|r| r.noise_std).collect();
    assert_eq!(stds, vec![0.5, 1.5, 2.5]);
    assert!(rep.to_csv().starts_with("noise_std,progress_rmse_pct,accuracy\n0.5,"));
}
