//! Plain univariate dynamic time warping with an L1 point cost.

use thiserror::Error;

/// Largest `len(a) * len(b)` the exhaustive oracle accepts.
pub const BRUTE_FORCE_MAX_CELLS: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum DtwError {
    #[error("DTW needs two non-empty sequences")]
    EmptySequence,
    #[error("exhaustive DTW limited to {max} cells, got {cells}")]
    TooLarge { cells: usize, max: usize },
}

/// Alignment path of 1-based `(i, j)` index pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarpPath {
    pub pairs: Vec<(usize, usize)>,
}

impl WarpPath {
    /// Checks the boundary, monotonicity and continuity conditions.
    pub fn is_valid(&self, len_a: usize, len_b: usize) -> bool {
        let (Some(&first), Some(&last)) = (self.pairs.first(), self.pairs.last()) else {
            return false;
        };
        first == (1, 1)
            && last == (len_a, len_b)
            && self.pairs.windows(2).all(|w| {
                let di = w[1].0 - w[0].0.min(w[1].0);
                let dj = w[1].1 - w[0].1.min(w[1].1);
                w[1].0 >= w[0].0 && w[1].1 >= w[0].1 && di <= 1 && dj <= 1 && di + dj >= 1
            })
    }

    /// Sum of `|a_i - b_j|` along the path.
    pub fn cost(&self, a: &[f64], b: &[f64]) -> f64 {
        self.pairs.iter().map(|&(i, j)| (a[i - 1] - b[j - 1]).abs()).sum()
    }
}

/// Minimal-cost alignment of `a` and `b` and the path that achieves it.
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<(f64, WarpPath), DtwError> {
    if a.is_empty() || b.is_empty() {
        return Err(DtwError::EmptySequence);
    }
    let (n, m) = (a.len(), b.len());
    let mut acc = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            let d = (a[i] - b[j]).abs();
            let best = match (i, j) {
                (0, 0) => 0.0f64,
                (0, _) => acc[j - 1],
                (_, 0) => acc[(i - 1) * m],
                _ => acc[(i - 1) * m + j - 1]
                    .min(acc[(i - 1) * m + j])
                    .min(acc[i * m + j - 1]),
            };
            acc[i * m + j] = d + best;
        }
    }

    // Backtrack preferring the diagonal on ties.
    let mut pairs = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n - 1, m - 1);
    pairs.push((i + 1, j + 1));
    while i > 0 || j > 0 {
        if i == 0 {
            j -= 1;
        } else if j == 0 {
            i -= 1;
        } else {
            let diag = acc[(i - 1) * m + j - 1];
            let up = acc[(i - 1) * m + j];
            let left = acc[i * m + j - 1];
            if diag <= up && diag <= left {
                i -= 1;
                j -= 1;
            } else if up <= left {
                i -= 1;
            } else {
                j -= 1;
            }
        }
        pairs.push((i + 1, j + 1));
    }
    pairs.reverse();
    Ok((acc[n * m - 1], WarpPath { pairs }))
}

/// Cost-only DTW in `O(min(len))` memory.
pub fn dtw_cost(a: &[f64], b: &[f64]) -> Result<f64, DtwError> {
    if a.is_empty() || b.is_empty() {
        return Err(DtwError::EmptySequence);
    }
    Ok(dtw_cost_bounded(a, b, f64::INFINITY).expect("unbounded DTW always completes"))
}

/// Cost-only DTW that gives up as soon as every partial alignment already
/// costs at least `cutoff`. Returns `None` in that case, otherwise the exact
/// cost, which is then strictly below `cutoff`. Both inputs must be non-empty.
pub fn dtw_cost_bounded(a: &[f64], b: &[f64], cutoff: f64) -> Option<f64> {
    DtwBuffer::default().cost_bounded(a, b, cutoff)
}

/// Reusable row storage for repeated cost-only DTW evaluations.
#[derive(Debug, Default, Clone)]
pub struct DtwBuffer {
    prev: Vec<f64>,
    cur: Vec<f64>,
}

impl DtwBuffer {
    /// Same contract as [`dtw_cost_bounded`].
    pub fn cost_bounded(&mut self, a: &[f64], b: &[f64], cutoff: f64) -> Option<f64> {
        debug_assert!(!a.is_empty() && !b.is_empty());
        let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
        let m = short.len();
        self.prev.clear();
        self.prev.resize(m, 0.0);
        self.cur.clear();
        self.cur.resize(m, 0.0);
        let (mut prev, mut cur) = (&mut self.prev, &mut self.cur);

        let x0 = long[0];
        let mut run = 0.0;
        let mut row_min = f64::INFINITY;
        for (slot, &y) in prev.iter_mut().zip(short) {
            run += (x0 - y).abs();
            *slot = run;
            row_min = row_min.min(run);
        }
        if row_min >= cutoff {
            return None;
        }
        for &x in &long[1..] {
            let mut left = prev[0] + (x - short[0]).abs();
            cur[0] = left;
            let mut row_min = left;
            for j in 1..m {
                let best = prev[j - 1].min(prev[j]).min(left);
                left = best + (x - short[j]).abs();
                cur[j] = left;
                row_min = row_min.min(left);
            }
            if row_min >= cutoff {
                return None;
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        let cost = prev[m - 1];
        (cost < cutoff).then_some(cost)
    }

    /// Like [`DtwBuffer::cost_bounded`], restricted to cells within `radius`
    /// of the diagonal joining the two corners (measured along the shorter
    /// sequence).
    pub fn cost_banded(&mut self, a: &[f64], b: &[f64], radius: usize, cutoff: f64) -> Option<f64> {
        debug_assert!(!a.is_empty() && !b.is_empty());
        let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
        let m = short.len();
        let rows = long.len();
        let slope = if rows > 1 { (m - 1) as f64 / (rows - 1) as f64 } else { 0.0 };
        let span = |r: usize| -> (usize, usize) {
            let c = r as f64 * slope;
            let lo = (c - radius as f64).ceil().max(0.0) as usize;
            let hi = ((c + radius as f64).floor() as usize).min(m - 1);
            (lo, hi)
        };
        self.prev.clear();
        self.prev.resize(m, f64::INFINITY);
        self.cur.clear();
        self.cur.resize(m, f64::INFINITY);
        let (mut prev, mut cur) = (&mut self.prev, &mut self.cur);

        let (_, hi0) = span(0);
        let x0 = long[0];
        let mut run = 0.0;
        let mut row_min = f64::INFINITY;
        for j in 0..=hi0 {
            run += (x0 - short[j]).abs();
            prev[j] = run;
            row_min = row_min.min(run);
        }
        if row_min >= cutoff {
            return None;
        }
        let mut held = (0, hi0);
        let mut stale: Option<(usize, usize)> = None;
        for (r, &x) in long.iter().enumerate().skip(1) {
            if let Some((lo, hi)) = stale {
                cur[lo..=hi].fill(f64::INFINITY);
            }
            let (lo, hi) = span(r);
            let mut left = f64::INFINITY;
            let mut row_min = f64::INFINITY;
            for j in lo..=hi {
                let diag = if j > 0 { prev[j - 1] } else { f64::INFINITY };
                left = diag.min(prev[j]).min(left) + (x - short[j]).abs();
                cur[j] = left;
                row_min = row_min.min(left);
            }
            if row_min >= cutoff {
                return None;
            }
            std::mem::swap(&mut prev, &mut cur);
            stale = Some(held);
            held = (lo, hi);
        }
        let cost = prev[m - 1];
        (cost < cutoff).then_some(cost)
    }
}

/// Exhaustive DTW oracle: enumerates every valid warping path.
pub fn dtw_brute_force(a: &[f64], b: &[f64]) -> Result<f64, DtwError> {
    if a.is_empty() || b.is_empty() {
        return Err(DtwError::EmptySequence);
    }
    let cells = a.len() * b.len();
    if cells > BRUTE_FORCE_MAX_CELLS {
        return Err(DtwError::TooLarge {
            cells,
            max: BRUTE_FORCE_MAX_CELLS,
        });
    }

    fn walk(a: &[f64], b: &[f64], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + (a[i] - b[j]).abs();
        if i + 1 == a.len() && j + 1 == b.len() {
            *best = best.min(acc);
            return;
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, acc, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, acc, best);
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, acc, best);
        }
    }

    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    Ok(best)
}
