//! Window transform and the sliding-window DTW search.

use super::nelder_mead::{self, NelderMeadConfig};
use super::{EstimatorError, TransformBounds, TransformParams};
use crate::dtw::DtwBuffer;
use crate::gait_data::round_half_up;
use serde::{Deserialize, Serialize};

/// `s_y * (v - t_y)` elementwise.
pub fn transform_window(window: &[f64], p: &TransformParams) -> Vec<f64> {
    window.iter().map(|v| p.s_y * (v - p.t_y)).collect()
}

fn transform_into(out: &mut Vec<f64>, window: &[f64], s_y: f64, t_y: f64) {
    out.clear();
    out.extend(window.iter().map(|v| s_y * (v - t_y)));
}

/// Scaled window length `round(s_x * n)`.
pub fn window_len(s_x: f64, n: usize) -> usize {
    round_half_up(s_x * n as f64)
}

fn feasible(i: usize, len: usize, l1: usize, ext_len: usize) -> bool {
    i >= 1 && len > l1 && i + len - 1 <= ext_len
}

/// `rs_ext[i .. i + n' - 1]` (1-based, inclusive) with `n' = round(s_x * n)`,
/// subject to `n' > l1` and `i + n' - 1 <= m + l1 = rs_ext.len()`.
pub fn scaled_window(
    rs_ext: &[f64],
    i: usize,
    s_x: f64,
    n: usize,
    l1: usize,
) -> Result<&[f64], EstimatorError> {
    if !(s_x > 0.0) {
        return Err(EstimatorError::InvalidConfig(format!("s_x must be positive, got {s_x}")));
    }
    let len = window_len(s_x, n);
    if !feasible(i, len, l1, rs_ext.len()) {
        return Err(EstimatorError::WindowOutOfBounds {
            start: i,
            len,
            l1,
            limit: rs_ext.len(),
        });
    }
    Ok(&rs_ext[i - 1..i - 1 + len])
}

/// Clamped percentage of the unextended reference covered up to the window end.
pub fn progress_pct(best_i: usize, window_len: usize, l1: usize, m: usize) -> f64 {
    let end = (best_i + window_len) as f64 - 1.0 - l1 as f64;
    (100.0 * end / m as f64).clamp(0.0, 100.0)
}

/// Search lattice for the first, exhaustive stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchGrid {
    pub i_stride: usize,
    pub s_x: Vec<f64>,
    pub s_y: Vec<f64>,
    pub t_y_points: usize,
}

impl Default for SearchGrid {
    fn default() -> Self {
        let levels = vec![0.8, 0.9, 1.0, 1.1, 1.25];
        Self {
            i_stride: 2,
            s_x: levels.clone(),
            s_y: levels,
            t_y_points: 5,
        }
    }
}

impl SearchGrid {
    /// `points` values evenly spanning `[lo, hi]`.
    pub fn t_y_levels(&self, lo: f64, hi: f64) -> Vec<f64> {
        let k = self.t_y_points.max(1);
        if k == 1 {
            return vec![0.5 * (lo + hi)];
        }
        (0..k)
            .map(|j| lo + (hi - lo) * j as f64 / (k - 1) as f64)
            .collect()
    }
}

/// One matching problem: both extended sequences plus the lengths that enter
/// the window constraints.
#[derive(Debug, Clone, Copy)]
pub struct MatchProblem<'a> {
    /// Extended reference, length `m + l1`.
    pub rs_ext: &'a [f64],
    /// Extended observation.
    pub cs_ext: &'a [f64],
    /// Part of the observation's transition that follows the vertical
    /// scale: the observation compared against scale `s_y` is
    /// `cs_ext + (s_y - 1) * cs_scaled`, over the leading elements. Empty
    /// when the transition does not scale.
    pub cs_scaled: &'a [f64],
    /// Reference length before extension.
    pub m: usize,
    pub l1: usize,
    /// Comparison length `n` that the window scale applies to.
    pub n: usize,
    pub bounds: TransformBounds,
    /// Warping band half-width as a fraction of the observation length;
    /// `None` leaves the warping unconstrained.
    pub band_frac: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult {
    pub best_i: usize,
    pub params: TransformParams,
    pub window_len: usize,
    pub cost: f64,
}

/// Candidate order key used for deterministic tie-breaking: smallest `i`,
/// then `s_x`, `s_y`, `t_y`.
type Key = (usize, usize, usize, usize);

struct Best {
    key: Key,
    result: MatchResult,
}

impl Best {
    /// Largest cost a candidate with `key` may have and still win.
    fn cutoff(&self, key: Key) -> f64 {
        if key < self.key {
            self.result.cost.next_up()
        } else {
            self.result.cost
        }
    }
}

fn nearest(levels: &[f64], target: f64) -> usize {
    (0..levels.len())
        .min_by(|&a, &b| {
            (levels[a] - target)
                .abs()
                .total_cmp(&(levels[b] - target).abs())
        })
        .unwrap_or(0)
}

/// `(s_y, t_y)` of the least-squares fit `cs ~ s_y * (w - t_y)`, with `w`
/// linearly resampled to the length of `cs`.
fn fit_line(w: &[f64], cs: &[f64]) -> Option<(f64, f64)> {
    let k = cs.len();
    if k < 2 || w.len() < 2 {
        return None;
    }
    let x: Vec<f64> = (0..k)
        .map(|j| {
            let pos = j as f64 * (w.len() - 1) as f64 / (k - 1) as f64;
            let lo = (pos.floor() as usize).min(w.len() - 2);
            let f = pos - lo as f64;
            w[lo] + (w[lo + 1] - w[lo]) * f
        })
        .collect();
    let mx = x.iter().sum::<f64>() / k as f64;
    let my = cs.iter().sum::<f64>() / k as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(cs) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return None;
    }
    // my = slope * (mx - t_y)
    Some((slope, mx - my / slope))
}

/// Grid search over `(i, s_x, s_y, t_y)`, the skipped starts next to the
/// best few, a second pass with the vertical transform fitted to the best
/// window, then Nelder-Mead over `(t_y, s_y, s_x)` at the best start.
pub fn search(
    problem: &MatchProblem<'_>,
    grid: &SearchGrid,
    nm: NelderMeadConfig,
) -> Result<MatchResult, EstimatorError> {
    let MatchProblem { rs_ext, cs_ext, cs_scaled, l1, n, bounds, band_frac, .. } = *problem;
    let ext_len = rs_ext.len();
    let radius = band_frac.map(|f| ((f * cs_ext.len() as f64).ceil() as usize).max(1));
    let observed_for = |s_y: f64| -> Vec<f64> {
        let mut cs = cs_ext.to_vec();
        for (v, d) in cs.iter_mut().zip(cs_scaled) {
            *v += (s_y - 1.0) * d;
        }
        cs
    };
    let clamp_levels = |levels: &[f64], (lo, hi): (f64, f64)| -> Vec<f64> {
        let mut v: Vec<f64> = levels.iter().map(|x| x.clamp(lo, hi)).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let s_x_levels = clamp_levels(&grid.s_x, bounds.s_x);
    let s_y_levels = clamp_levels(&grid.s_y, bounds.s_y);
    let t_y_levels = grid.t_y_levels(bounds.t_y.0, bounds.t_y.1);
    let observed: Vec<Vec<f64>> = s_y_levels.iter().map(|&s_y| observed_for(s_y)).collect();
    let stride = grid.i_stride.max(1);

    let mut dtw = DtwBuffer::default();
    let mut eval = |i: usize, len: usize, v: &Vertical<'_>, cutoff: f64, buf: &mut Vec<f64>| {
        transform_into(buf, &rs_ext[i - 1..i - 1 + len], v.s_y, v.t_y);
        let cs = v.observed;
        // Both endpoints are on every path.
        let lb = (buf[0] - cs[0]).abs() + (buf[len - 1] - cs[cs.len() - 1]).abs();
        if (len > 1 || cs.len() > 1) && lb >= cutoff {
            return None;
        }
        match radius {
            Some(r) => dtw.cost_banded(buf, cs, r, cutoff),
            None => dtw.cost_bounded(buf, cs, cutoff),
        }
    };
    let lattice: Vec<Vertical<'_>> = s_y_levels
        .iter()
        .enumerate()
        .flat_map(|(b, &s_y)| {
            let obs = &observed[b][..];
            t_y_levels
                .iter()
                .enumerate()
                .map(move |(c, &t_y)| Vertical { key: (b, c), s_y, t_y, observed: obs })
        })
        .collect();

    let mut buf = Vec::with_capacity(ext_len);
    let mut best: Option<Best> = None;
    // Seed the incumbent near the identity so early abandoning bites at once.
    {
        let b = nearest(&s_y_levels, 1.0);
        let c = nearest(&t_y_levels, 0.5 * (bounds.t_y.0 + bounds.t_y.1));
        let seed = &lattice[b * t_y_levels.len() + c];
        let a = nearest(&s_x_levels, 1.0);
        let len = window_len(s_x_levels[a], n);
        if feasible(1, len, l1, ext_len) {
            if let Some(cost) = eval(1, len, seed, f64::INFINITY, &mut buf) {
                best = Some(Best {
                    key: (1, a, b, c),
                    result: MatchResult {
                        best_i: 1,
                        params: TransformParams { t_y: seed.t_y, s_y: seed.s_y, s_x: s_x_levels[a] },
                        window_len: len,
                        cost,
                    },
                });
            }
        }
    }

    // Every `s_x` level at start `i` against the given vertical candidates;
    // returns the lowest cost seen there.
    let mut scan = |i: usize, verticals: &[Vertical<'_>], best: &mut Option<Best>, buf: &mut Vec<f64>| -> f64 {
        let mut lowest = f64::INFINITY;
        for (a, &s_x) in s_x_levels.iter().enumerate() {
            let len = window_len(s_x, n);
            if !feasible(i, len, l1, ext_len) {
                continue;
            }
            for v in verticals {
                let key = (i, a, v.key.0, v.key.1);
                if let Some(bst) = best.as_ref().filter(|bst| bst.key == key) {
                    lowest = lowest.min(bst.result.cost);
                    continue;
                }
                let cutoff = best.as_ref().map_or(f64::INFINITY, |bst| bst.cutoff(key));
                if let Some(cost) = eval(i, len, v, cutoff, buf) {
                    lowest = lowest.min(cost);
                    *best = Some(Best {
                        key,
                        result: MatchResult {
                            best_i: i,
                            params: TransformParams { t_y: v.t_y, s_y: v.s_y, s_x },
                            window_len: len,
                            cost,
                        },
                    });
                }
            }
        }
        lowest
    };

    let last_start = s_x_levels
        .iter()
        .map(|&s| window_len(s, n))
        .filter(|&len| len > l1 && len <= ext_len)
        .min()
        .map_or(0, |len| ext_len + 1 - len);
    let mut per_start: Vec<(f64, usize)> = Vec::new();
    for i in (1..=last_start).step_by(stride) {
        let lowest = scan(i, &lattice, &mut best, &mut buf);
        if lowest.is_finite() {
            per_start.push((lowest, i));
        }
    }
    // Starts skipped by the stride, next to the most promising scanned ones.
    if stride > 1 {
        per_start.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mut extra: Vec<usize> = per_start
            .iter()
            .take(3)
            .flat_map(|&(_, i)| [i.wrapping_sub(1), i + 1])
            .filter(|&i| i >= 1 && i <= last_start && (i - 1) % stride != 0)
            .collect();
        extra.sort_unstable();
        extra.dedup();
        for i in extra {
            scan(i, &lattice, &mut best, &mut buf);
        }
    }
    let grid_best = best.as_ref().ok_or(EstimatorError::NoFeasibleWindow)?.result;

    // Vertical transform fitted along the best window, tried at every start.
    let ident_len = window_len(s_x_levels[nearest(&s_x_levels, 1.0)], n).min(ext_len);
    let mut windows = vec![(1, ident_len), (grid_best.best_i, grid_best.window_len)];
    windows.dedup();
    for (q, &(fit_i, fit_len)) in windows.iter().enumerate() {
        let fitted = fit_line(&rs_ext[fit_i - 1..fit_i - 1 + fit_len], cs_ext)
            .map(|(s_y, t_y)| (s_y.clamp(bounds.s_y.0, bounds.s_y.1), t_y.clamp(bounds.t_y.0, bounds.t_y.1)));
        if let Some((s_y, t_y)) = fitted {
            let obs = observed_for(s_y);
            let v = [Vertical { key: (s_y_levels.len() + q, 0), s_y, t_y, observed: &obs }];
            for i in 1..=last_start {
                scan(i, &v, &mut best, &mut buf);
            }
        }
    }
    let mut result = best.ok_or(EstimatorError::NoFeasibleWindow)?.result;

    // Continuous refinement of the transform at the chosen start.
    let start_i = result.best_i;
    let objective = |x: &[f64]| -> f64 {
        let (t_y, s_y, s_x) = (x[0], x[1], x[2]);
        let len = window_len(s_x, n);
        if !feasible(start_i, len, l1, ext_len) {
            return f64::INFINITY;
        }
        let cs = observed_for(s_y);
        let mut local = Vec::with_capacity(len);
        transform_into(&mut local, &rs_ext[start_i - 1..start_i - 1 + len], s_y, t_y);
        let mut dtw = DtwBuffer::default();
        match radius {
            Some(r) => dtw.cost_banded(&local, &cs, r, f64::INFINITY),
            None => dtw.cost_bounded(&local, &cs, f64::INFINITY),
        }
        .unwrap_or(f64::INFINITY)
    };
    if nm.max_evaluations > 0 {
        let p = result.params;
        let t_span = (bounds.t_y.1 - bounds.t_y.0).max(1e-9);
        let refined = nelder_mead::minimize(
            objective,
            &[p.t_y, p.s_y, p.s_x],
            &[0.1 * t_span, 0.05, 0.05],
            &[bounds.t_y.0, bounds.s_y.0, bounds.s_x.0],
            &[bounds.t_y.1, bounds.s_y.1, bounds.s_x.1],
            nm,
        );
        if refined.value < result.cost {
            let params = TransformParams { t_y: refined.x[0], s_y: refined.x[1], s_x: refined.x[2] };
            result = MatchResult {
                best_i: start_i,
                params,
                window_len: window_len(params.s_x, n),
                cost: refined.value,
            };
        }
    }
    Ok(result)
}

/// One vertical transform candidate with the observation it is compared to.
struct Vertical<'a> {
    key: (usize, usize),
    s_y: f64,
    t_y: f64,
    observed: &'a [f64],
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_examples() {
        let id = TransformParams { t_y: 0.0, s_y: 1.0, s_x: 1.0 };
        assert_eq!(transform_window(&[1.5, -2.0], &id), vec![1.5, -2.0]);
        let p = TransformParams { t_y: 1.0, s_y: 2.0, s_x: 1.0 };
        assert_eq!(transform_window(&[1.0, 2.0, 3.0], &p), vec![0.0, 2.0, 4.0]);
        let p = TransformParams { t_y: 0.0, s_y: 0.5, s_x: 1.0 };
        assert_eq!(transform_window(&[4.0], &p), vec![2.0]);
    }

    #[test]
    fn window_scaling() {
        let rs: Vec<f64> = (0..60).map(f64::from).collect();
        assert_eq!(scaled_window(&rs, 1, 1.0, 12, 5).unwrap().len(), 12);
        assert_eq!(scaled_window(&rs, 3, 2.0, 10, 5).unwrap(), &rs[2..22]);
        assert_eq!(window_len(1.25, 10), 13);
        assert_eq!(window_len(1.05, 10), 11);
    }

    #[test]
    fn window_constraints() {
        let rs = vec![0.0; 30];
        assert!(matches!(
            scaled_window(&rs, 25, 1.0, 10, 5),
            Err(EstimatorError::WindowOutOfBounds { start: 25, len: 10, .. })
        ));
        assert!(scaled_window(&rs, 21, 1.0, 10, 5).is_ok());
        // n' must exceed l1
        assert!(scaled_window(&rs, 1, 0.5, 10, 5).is_err());
        assert!(scaled_window(&rs, 1, 0.0, 10, 5).is_err());
    }

    #[test]
    fn progress_normalisation() {
        assert_eq!(progress_pct(1, 110, 10, 100), 100.0);
        assert_eq!(progress_pct(1, 60, 10, 100), 50.0);
        assert_eq!(progress_pct(1, 5, 10, 100), 0.0);
    }
}
