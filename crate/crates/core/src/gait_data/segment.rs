use super::{round_half_up, GaitDataError, GaitTrajectory};

/// Cropped windows of one obstacle-crossing cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct StrideSegments {
    /// Thigh angle preceding the crossing stride, 20% of the stride length.
    pub pre_angle: Vec<f64>,
    /// `(thigh_deg, knee_deg)` from the thigh minimum to the next knee minimum.
    pub angle: Vec<(f64, f64)>,
    /// Sound-ankle height over the sound leg's crossing swing.
    pub ankle_height: Vec<f64>,
    pub thigh_min_idx: usize,
    pub knee_min_idx: usize,
    pub ankle_start_idx: usize,
    pub ankle_end_idx: usize,
}

impl StrideSegments {
    pub fn thigh(&self) -> Vec<f64> {
        self.angle.iter().map(|a| a.0).collect()
    }

    pub fn knee(&self) -> Vec<f64> {
        self.angle.iter().map(|a| a.1).collect()
    }

    pub fn len(&self) -> usize {
        self.angle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angle.is_empty()
    }
}

/// Centered 5-sample moving average; the window shrinks at the edges.
pub fn smooth5(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|j| {
            let lo = j.saturating_sub(2);
            let hi = (j + 2).min(n.saturating_sub(1));
            let w = &x[lo..=hi];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect()
}

/// Interior indices of the smoothed signal that are strictly below both
/// neighbours. A flat run bounded by higher values on both sides counts once,
/// at its first index.
pub fn local_minima(x: &[f64]) -> Vec<usize> {
    let s = smooth5(x);
    let mut out = Vec::new();
    let mut j = 1;
    while j + 1 < s.len() {
        if s[j] < s[j - 1] {
            let mut k = j;
            while k + 1 < s.len() && s[k + 1] == s[j] {
                k += 1;
            }
            if k + 1 < s.len() && s[k + 1] > s[j] {
                out.push(j);
            }
            j = k + 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Splits one obstacle-crossing cycle out of `traj`.
///
/// The stride runs from the first thigh-angle minimum at or after
/// `cycle_start_hint` to the next knee-angle minimum. The pre-crossing window
/// is the 20% of that length immediately before the thigh minimum, and the
/// ankle window spans the two sound-ankle minima bracketing the sound leg's
/// swing over the obstacle (the last two ankle minima not after the thigh
/// minimum).
pub fn segment_stride(
    traj: &GaitTrajectory,
    cycle_start_hint: usize,
) -> Result<StrideSegments, GaitDataError> {
    let thigh = traj.thigh();
    let knee = traj.knee();
    let ankle = traj.ankle_z();

    let thigh_min_idx = local_minima(&thigh)
        .into_iter()
        .find(|&j| j >= cycle_start_hint)
        .ok_or(GaitDataError::NoMinimumFound {
            signal: "thigh angle",
            after: cycle_start_hint,
        })?;
    let knee_min_idx = local_minima(&knee)
        .into_iter()
        .find(|&j| j > thigh_min_idx)
        .ok_or(GaitDataError::NoMinimumFound {
            signal: "knee angle",
            after: thigh_min_idx + 1,
        })?;

    let len = knee_min_idx - thigh_min_idx + 1;
    if len < 5 {
        return Err(GaitDataError::SegmentTooShort { len });
    }
    let pre_len = round_half_up(0.2 * len as f64).max(1);
    if pre_len > thigh_min_idx {
        return Err(GaitDataError::InsufficientPreCrossing {
            needed: pre_len,
            available: thigh_min_idx,
        });
    }

    let ankle_minima: Vec<usize> = local_minima(&ankle)
        .into_iter()
        .filter(|&j| j <= thigh_min_idx)
        .collect();
    let (ankle_start_idx, ankle_end_idx) = match ankle_minima.as_slice() {
        [.., a, b] => (*a, *b),
        _ => {
            return Err(GaitDataError::NoMinimumFound {
                signal: "ankle height",
                after: 0,
            })
        }
    };

    let samples = traj.samples();
    Ok(StrideSegments {
        pre_angle: thigh[thigh_min_idx - pre_len..thigh_min_idx].to_vec(),
        angle: samples[thigh_min_idx..=knee_min_idx]
            .iter()
            .map(|s| (s.thigh_deg, s.knee_deg))
            .collect(),
        ankle_height: ankle[ankle_start_idx..=ankle_end_idx].to_vec(),
        thigh_min_idx,
        knee_min_idx,
        ankle_start_idx,
        ankle_end_idx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait_data::{GaitSample, SubjectInfo};
    use std::f64::consts::PI;

    fn trajectory(thigh: &[f64], knee: &[f64], ankle: &[f64]) -> GaitTrajectory {
        let samples = (0..thigh.len())
            .map(|j| GaitSample {
                t: j as f64 / 100.0,
                thigh_deg: thigh[j],
                knee_deg: knee[j],
                ankle_z_mm: ankle[j],
            })
            .collect();
        GaitTrajectory::new(samples, 100.0, SubjectInfo::default()).unwrap()
    }

    /// Cosine dips centred on chosen indices; flat elsewhere.
    fn dips(n: usize, centres: &[(usize, f64)]) -> Vec<f64> {
        (0..n)
            .map(|j| {
                centres
                    .iter()
                    .map(|&(c, hw)| {
                        let d = (j as f64 - c as f64) / hw;
                        if d.abs() < 1.0 {
                            -0.5 * (1.0 + (PI * d).cos())
                        } else {
                            0.0
                        }
                    })
                    .sum::<f64>()
            })
            .collect()
    }

    fn brute_force_minima(x: &[f64]) -> Vec<usize> {
        let s = smooth5(x);
        let mut out = Vec::new();
        for j in 1..s.len() - 1 {
            if s[j] < s[j - 1] && s[j] < s[j + 1] {
                out.push(j);
            }
        }
        out
    }

    #[test]
    fn stride_boundaries_follow_minima() {
        let n = 260;
        let thigh: Vec<f64> = dips(n, &[(100, 40.0)]).iter().map(|v| 10.0 * v).collect();
        let knee: Vec<f64> = dips(n, &[(220, 30.0)]).iter().map(|v| 20.0 + 5.0 * v).collect();
        let ankle: Vec<f64> = dips(n, &[(30, 8.0), (60, 8.0)]).iter().map(|v| 70.0 + v).collect();
        assert_eq!(brute_force_minima(&thigh), vec![100]);
        assert_eq!(brute_force_minima(&knee), vec![220]);

        let seg = segment_stride(&trajectory(&thigh, &knee, &ankle), 0).unwrap();
        assert_eq!((seg.thigh_min_idx, seg.knee_min_idx), (100, 220));
        assert_eq!(seg.angle.len(), 121);
        assert_eq!(seg.pre_angle.len(), 24);
        assert_eq!(seg.pre_angle, thigh[76..100].to_vec());
        assert_eq!(seg.angle[0], (thigh[100], knee[100]));
        assert_eq!(seg.angle[120], (thigh[220], knee[220]));
        assert_eq!((seg.ankle_start_idx, seg.ankle_end_idx), (30, 60));
        assert_eq!(seg.ankle_height.len(), 31);
    }

    #[test]
    fn flat_bottom_counts_once() {
        let x = [9.0, 9.0, 9.0, 5.0, 1.0, 1.0, 5.0, 9.0, 9.0, 9.0];
        assert_eq!(local_minima(&x), vec![4]);
        let shelf = [9.0, 9.0, 9.0, 5.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        assert!(local_minima(&shelf).is_empty());
    }

    #[test]
    fn constant_signal_has_no_minimum() {
        let flat = vec![5.0; 50];
        let err = segment_stride(&trajectory(&flat, &flat, &flat), 0).unwrap_err();
        assert!(matches!(err, GaitDataError::NoMinimumFound { signal: "thigh angle", .. }));
    }

    #[test]
    fn ten_sample_stride_has_two_pre_samples() {
        let n = 60;
        let thigh: Vec<f64> = dips(n, &[(30, 4.0)]);
        let knee: Vec<f64> = dips(n, &[(39, 4.0)]);
        let ankle: Vec<f64> = dips(n, &[(8, 3.0), (20, 3.0)]).iter().map(|v| 50.0 + v).collect();
        let seg = segment_stride(&trajectory(&thigh, &knee, &ankle), 0).unwrap();
        assert_eq!(seg.angle.len(), 10);
        assert_eq!(seg.pre_angle.len(), 2);
    }

    #[test]
    fn short_stride_is_rejected() {
        let n = 60;
        let thigh: Vec<f64> = dips(n, &[(30, 3.0)]);
        let knee: Vec<f64> = dips(n, &[(33, 3.0)]);
        let ankle = vec![1.0; n];
        let err = segment_stride(&trajectory(&thigh, &knee, &ankle), 0).unwrap_err();
        assert!(matches!(err, GaitDataError::SegmentTooShort { len: 4 }), "{err:?}");
    }

    #[test]
    fn hint_skips_earlier_minima() {
        let n = 200;
        let thigh: Vec<f64> = dips(n, &[(40, 10.0), (120, 10.0)]);
        let knee: Vec<f64> = dips(n, &[(170, 10.0)]);
        let ankle: Vec<f64> = dips(n, &[(60, 5.0), (90, 5.0)]).iter().map(|v| 9.0 + v).collect();
        let seg = segment_stride(&trajectory(&thigh, &knee, &ankle), 50).unwrap();
        assert_eq!(seg.thigh_min_idx, 120);
        let err = segment_stride(&trajectory(&thigh, &knee, &ankle), 121).unwrap_err();
        assert!(matches!(err, GaitDataError::NoMinimumFound { .. }));
    }
}
