use super::*;
use crate::dtw::dtw_distance;
use crate::gait_data::{generate_synthetic, resample, segment_stride, SyntheticGaitConfig};

fn synthetic_stride(seed: u64, rate_hz: f64) -> (Vec<f64>, f64) {
    let cfg = SyntheticGaitConfig {
        obstacle_height_mm: 150.0 + (seed % 7) as f64 * 20.0,
        foot_distance_mm: 100.0 + (seed % 5) as f64 * 45.0,
        stride_duration_s: 1.0 + (seed % 4) as f64 * 0.1,
        rate_hz,
        seed,
        ..Default::default()
    };
    let traj = generate_synthetic(&cfg).unwrap();
    let seg = segment_stride(&traj, 0).unwrap();
    let duration = (seg.len() - 1) as f64 / rate_hz;
    (seg.thigh(), duration)
}

fn reference(seed: u64) -> (ReferenceSequence, Vec<f64>, f64) {
    let (thigh, duration) = synthetic_stride(seed, 100.0);
    let rs = resample(&thigh, 100).unwrap();
    (ReferenceSequence::new(rs, duration).unwrap(), thigh, duration)
}

/// Session with the first `k` raw stride samples fed in without matching.
fn session_with(reference: ReferenceSequence, raw: &[f64], k: usize, rate: f64) -> EstimatorSession {
    let mut s = EstimatorSession::new(reference, rate, EstimatorConfig::default()).unwrap();
    for (j, v) in raw[..k].iter().enumerate() {
        s.times.push(j as f64 / rate);
        s.observed.push(*v);
    }
    s
}

#[test]
fn extension_rule_examples() {
    let cfg = EstimatorConfig::default();
    assert_eq!(select_extension(0, 0, ExtensionMode::Short, &cfg), ExtensionMode::Short);
    assert_eq!(select_extension(6, 5, ExtensionMode::Short, &cfg), ExtensionMode::Long);
    assert_eq!(select_extension(4, 2, ExtensionMode::Short, &cfg), ExtensionMode::Short);
    assert_eq!(select_extension(2, 9, ExtensionMode::Short, &cfg), ExtensionMode::Short);
    assert_eq!(select_extension(7, 0, ExtensionMode::Long, &cfg), ExtensionMode::Long);
}

#[test]
fn knee_index_examples() {
    assert_eq!(map_progress_to_knee_index(0.0, 200), 1);
    assert_eq!(map_progress_to_knee_index(100.0, 200), 200);
    assert_eq!(map_progress_to_knee_index(50.0, 201), 101);
    assert_eq!(map_progress_to_knee_index(50.0, 1), 1);
}

#[test]
fn reference_validation() {
    assert!(ReferenceSequence::new(vec![0.0; 9], 1.0).is_err());
    assert!(ReferenceSequence::new(vec![0.0; 10], 0.0).is_err());
    let mut v = vec![0.0; 12];
    v[3] = f64::NAN;
    assert!(ReferenceSequence::new(v, 1.0).is_err());
}

#[test]
fn prefix_of_reference_matches_at_start() {
    let (rs, raw, _) = reference(3);
    let m = rs.len();
    for frac in [0.2, 0.45, 0.7] {
        let k = (frac * raw.len() as f64).round() as usize;
        let s = session_with(rs.clone(), &raw, k, 100.0);
        let est = s.optimize_match().unwrap();
        let expected = 100.0 * k as f64 / raw.len() as f64;
        assert_eq!(est.best_i, 1, "frac {frac}: {est:?}");
        assert!(
            (est.progress_pct - expected).abs() <= 100.0 / m as f64 + 1e-9,
            "frac {frac}: {} vs {expected}",
            est.progress_pct
        );
    }
}

#[test]
fn full_observation_reaches_the_end() {
    let (rs, raw, _) = reference(5);
    let s = session_with(rs, &raw, raw.len(), 100.0);
    let est = s.optimize_match().unwrap();
    assert_eq!(est.progress_pct, 100.0);
}

#[test]
fn affine_observation_recovers_scale_and_progress() {
    let (rs, raw, _) = reference(8);
    let k = raw.len() / 2;
    let plain = session_with(rs.clone(), &raw, k, 100.0).optimize_match().unwrap();
    for (a, b) in [(1.2, 3.0), (0.85, -4.0), (1.0, 5.0)] {
        let warped: Vec<f64> = raw.iter().map(|v| a * v + b).collect();
        let est = session_with(rs.clone(), &warped, k, 100.0).optimize_match().unwrap();
        assert!((est.params_hat.s_y - a).abs() <= 0.1 * a, "a={a} b={b}: {est:?}");
        assert!((est.progress_pct - plain.progress_pct).abs() <= 2.0, "a={a} b={b}: {est:?}");
    }
}

#[test]
fn too_few_samples_is_pending() {
    let (rs, raw, _) = reference(1);
    let mut s = EstimatorSession::new(rs, 100.0, EstimatorConfig::default()).unwrap();
    for j in 0..3 {
        assert_eq!(s.update(j as f64 / 100.0, raw[j]).unwrap(), UpdateOutcome::Pending);
    }
    assert!(matches!(s.optimize_match(), Err(EstimatorError::TooShort { len: 3, needed: 4 })));
    assert!(s.update(0.03, raw[3]).unwrap().estimate().is_some());
    assert!(matches!(s.update(0.03, raw[4]), Err(EstimatorError::InvalidSample(_))));
}

fn stream(rs: &ReferenceSequence, raw: &[f64], rate: f64) -> Vec<ProgressEstimate> {
    let mut s = EstimatorSession::new(rs.clone(), rate, EstimatorConfig::default()).unwrap();
    raw.iter()
        .enumerate()
        .filter_map(|(j, v)| s.update(j as f64 / rate, *v).unwrap().estimate().copied())
        .collect()
}

#[test]
fn streaming_self_match_is_monotone_and_ends_at_100() {
    let (rs, raw, _) = reference(2);
    let est = stream(&rs, &raw, 100.0);
    assert_eq!(est.len(), raw.len() - 3);
    for w in est.windows(2) {
        assert!(w[1].progress_pct >= w[0].progress_pct);
    }
    assert!((est.last().unwrap().progress_pct - 100.0).abs() <= 1.0);
    assert!(est.iter().any(|e| e.mode == ExtensionMode::Long));
    // accuracy against elapsed fraction
    for (j, e) in est.iter().enumerate() {
        let truth = 100.0 * (j + 3) as f64 / (raw.len() - 1) as f64;
        assert!((e.progress_pct - truth).abs() <= 2.0, "sample {}: {} vs {truth}", j + 4, e.progress_pct);
    }
}

#[test]
fn streaming_is_deterministic() {
    let (rs, raw, _) = reference(4);
    let a = stream(&rs, &raw[..40], 100.0);
    let b = stream(&rs, &raw[..40], 100.0);
    assert_eq!(a, b);
}

/// Exhaustive oracle over every start `i` and the same coarse lattice of
/// `(s_x, s_y, t_y)`, using the full-table DTW.
fn lattice_oracle(p: &MatchProblem<'_>, grid: &SearchGrid) -> f64 {
    let mut best = f64::INFINITY;
    let t_levels = grid.t_y_levels(p.bounds.t_y.0, p.bounds.t_y.1);
    for i in 1..=p.rs_ext.len() {
        for &s_x in &grid.s_x {
            let len = (s_x * p.n as f64 + 0.5).floor() as usize;
            if len <= p.l1 || i + len - 1 > p.rs_ext.len() {
                continue;
            }
            let w = &p.rs_ext[i - 1..i - 1 + len];
            for &s_y in &grid.s_y {
                for &t_y in &t_levels {
                    let tw: Vec<f64> = w.iter().map(|v| s_y * (v - t_y)).collect();
                    best = best.min(dtw_distance(&tw, p.cs_ext).unwrap().0);
                }
            }
        }
    }
    best
}

#[test]
fn heuristic_is_close_to_lattice_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let grid = SearchGrid::default();
    for trial in 0..12 {
        let m = rng.random_range(20..=60);
        let n_cs = rng.random_range(4..=16);
        let l1 = 4;
        let phase: f64 = rng.random_range(0.0..3.0);
        let rs: Vec<f64> = (0..m).map(|j| 20.0 * (j as f64 / 9.0 + phase).sin()).collect();
        let start = rng.random_range(0..m - n_cs);
        let cs: Vec<f64> = rs[start..start + n_cs]
            .iter()
            .map(|v| 1.1 * v + rng.random_range(-1.0..1.0))
            .collect();
        let p = ExtensionParams {
            amplitude: 3.0,
            decay_k: 2.0,
            num_cycles: 1.0,
            lin_decay_c: 0.5,
            short_len: l1,
            long_len: l1,
        };
        let rs_ext = extend_sinusoidal(&rs, &p).unwrap();
        let cs_ext = extend_sinusoidal(&cs, &p).unwrap();
        let problem = MatchProblem {
            rs_ext: &rs_ext,
            cs_ext: &cs_ext,
            cs_scaled: &[],
            m,
            l1,
            n: l1 + n_cs,
            bounds: TransformBounds { t_y: (-10.0, 10.0), s_y: (0.5, 2.0), s_x: (0.5, 2.0) },
            band_frac: None,
        };
        let found = search(&problem, &grid, NelderMeadConfig::default()).unwrap();
        let oracle = lattice_oracle(&problem, &grid);
        assert!(found.cost <= 1.05 * oracle + 1e-9, "trial {trial}: {} vs {oracle}", found.cost);
        // Window constraints hold and the reported cost is real.
        assert!(found.window_len > l1);
        assert!(found.best_i + found.window_len - 1 <= m + l1);
        assert!(problem.bounds.contains(&found.params));
        let w = scaled_window(&rs_ext, found.best_i, found.params.s_x, problem.n, l1).unwrap();
        let recost = dtw_distance(&transform_window(w, &found.params), &cs_ext).unwrap().0;
        assert!((recost - found.cost).abs() <= 1e-9 * recost.max(1.0));
    }
}

#[test]
fn infeasible_problem_reports_no_window() {
    let rs_ext = vec![0.0; 12];
    let cs_ext = vec![0.0; 12];
    let problem = MatchProblem {
        rs_ext: &rs_ext,
        cs_ext: &cs_ext,
        cs_scaled: &[],
        m: 10,
        l1: 2,
        n: 40,
        bounds: TransformBounds { t_y: (-1.0, 1.0), s_y: (0.5, 2.0), s_x: (0.5, 2.0) },
        band_frac: None,
    };
    assert!(matches!(
        search(&problem, &SearchGrid::default(), NelderMeadConfig::default()),
        Err(EstimatorError::NoFeasibleWindow)
    ));
}
