//! Streaming gait-phase-progress estimation.
//!
//! The observed thigh angle since cycle entry (the comparison sequence) is
//! matched against the network-predicted thigh trajectory (the reference).
//! Both are prefixed with a transition sequence, a window of the extended
//! reference is scaled vertically and horizontally, and the window start and
//! transform minimising the DTW distance give the matched end index. That end
//! index, relative to the reference length, is the progress.
//!
//! The horizontal scale acts on the comparison length expressed in reference
//! samples: the elapsed observation time multiplied by the reference's
//! sampling rate (`(m - 1) / duration_s`). By default the observed curve is
//! resampled onto the reference's time grid, so one observed sample spans one
//! reference sample; alternatively it is resampled to a fixed length.

mod extension;
mod nelder_mead;
mod search;

pub use extension::{
    extend_linear, extend_sinusoidal, initial_slope, linear_transition, sinusoidal_transition,
    ExtensionParams,
};
pub use nelder_mead::{minimize, Minimum, NelderMeadConfig};
pub use search::{
    progress_pct, scaled_window, search, transform_window, window_len, MatchProblem, MatchResult,
    SearchGrid,
};

use crate::gait_data::{resample_step, resample_timed, round_half_up, GaitDataError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("invalid reference: {0}")]
    InvalidReference(String),
    #[error("invalid estimator config: {0}")]
    InvalidConfig(String),
    #[error("sequence is empty")]
    EmptySequence,
    #[error("sequence has {len} values, {needed} required")]
    TooShort { len: usize, needed: usize },
    #[error("window [{start}, {start}+{len}-1] violates n' > {l1} or end <= {limit}")]
    WindowOutOfBounds {
        start: usize,
        len: usize,
        l1: usize,
        limit: usize,
    },
    #[error("no window start and scale satisfy the window constraints")]
    NoFeasibleWindow,
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error(transparent)]
    Gait(#[from] GaitDataError),
}

/// Network-predicted thigh trajectory over one crossing stride.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSequence {
    values: Vec<f64>,
    duration_s: f64,
}

impl ReferenceSequence {
    /// `duration_s` is the time from the first to the last of `values`.
    pub fn new(values: Vec<f64>, duration_s: f64) -> Result<Self, EstimatorError> {
        if values.len() < 10 {
            return Err(EstimatorError::InvalidReference(format!(
                "reference needs at least 10 samples, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EstimatorError::InvalidReference("non-finite value".into()));
        }
        if !(duration_s.is_finite() && duration_s > 0.0) {
            return Err(EstimatorError::InvalidReference(format!(
                "duration must be positive, got {duration_s}"
            )));
        }
        Ok(Self { values, duration_s })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_s
    }

    fn range(&self) -> f64 {
        let (lo, hi) = min_max(&self.values);
        hi - lo
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    /// Vertical translation, degrees.
    pub t_y: f64,
    /// Vertical scale.
    pub s_y: f64,
    /// Horizontal (window length) scale.
    pub s_x: f64,
}

impl TransformParams {
    pub const IDENTITY: Self = Self { t_y: 0.0, s_y: 1.0, s_x: 1.0 };
}

/// Closed search ranges for each transform parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformBounds {
    pub t_y: (f64, f64),
    pub s_y: (f64, f64),
    pub s_x: (f64, f64),
}

impl TransformBounds {
    pub fn contains(&self, p: &TransformParams) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo - 1e-12 && v <= hi + 1e-12;
        inside(p.t_y, self.t_y) && inside(p.s_y, self.s_y) && inside(p.s_x, self.s_x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtensionMode {
    /// Sinusoidal transition, `l1 = short_len`.
    Short,
    /// Linear transition, `l1 = long_len`.
    Long,
}

/// Tunables of the estimator. Defaults follow the documented choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Fixed length the observed curve is resampled to.
    pub resample_len: usize,
    /// Resample the observation onto the reference sample spacing instead.
    pub resample_to_reference_grid: bool,
    /// Leading samples averaged into the value the transitions start from.
    pub anchor_len: usize,
    /// Warping band half-width as a fraction of the observation length.
    /// Zero leaves the warping unconstrained.
    pub band_frac: f64,
    /// Sinusoid amplitude as a fraction of the reference range.
    pub amplitude_frac: f64,
    pub decay_k: f64,
    pub num_cycles: f64,
    pub lin_decay_c: f64,
    /// Short extension length as a fraction of the reference length.
    pub short_frac: f64,
    /// Long extension length as a fraction of the reference length.
    pub long_frac: f64,
    pub s_y_min: f64,
    pub s_y_max: f64,
    pub s_x_min: f64,
    pub s_x_max: f64,
    /// Margin of the `t_y` range beyond the observed values and around the
    /// start-value offset.
    pub t_y_margin_deg: f64,
    pub grid: SearchGrid,
    pub nm_max_evaluations: usize,
    /// Matches below this count always use the short extension.
    pub short_min_iterations: usize,
    /// Progress threshold, percent, for counting towards the long extension.
    pub long_progress_threshold: f64,
    /// Consecutive matches above the threshold that switch to the long extension.
    pub long_after_consecutive: usize,
    /// Samples required before the first match.
    pub min_samples: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            resample_len: 100,
            resample_to_reference_grid: true,
            band_frac: 0.01,
            anchor_len: 1,
            amplitude_frac: 0.25,
            decay_k: 2.0,
            num_cycles: 1.0,
            lin_decay_c: 0.5,
            short_frac: 0.20,
            long_frac: 0.25,
            s_y_min: 0.5,
            s_y_max: 2.0,
            s_x_min: 0.5,
            s_x_max: 2.0,
            t_y_margin_deg: 10.0,
            grid: SearchGrid::default(),
            nm_max_evaluations: 60,
            short_min_iterations: 3,
            long_progress_threshold: 30.0,
            long_after_consecutive: 5,
            min_samples: 4,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<(), EstimatorError> {
        let bad = |m: &str| Err(EstimatorError::InvalidConfig(m.to_string()));
        if self.resample_len < 4 {
            return bad("resample_len must be at least 4");
        }
        if !(self.band_frac >= 0.0 && self.band_frac.is_finite()) {
            return bad("band_frac must be finite and >= 0");
        }
        if !(self.s_y_min > 0.0 && self.s_y_min <= self.s_y_max) {
            return bad("need 0 < s_y_min <= s_y_max");
        }
        if !(self.s_x_min > 0.0 && self.s_x_min <= self.s_x_max) {
            return bad("need 0 < s_x_min <= s_x_max");
        }
        if !(self.t_y_margin_deg >= 0.0) {
            return bad("t_y_margin_deg must be >= 0");
        }
        if !(self.short_frac > 0.0 && self.long_frac > 0.0) {
            return bad("extension fractions must be positive");
        }
        if self.grid.s_x.is_empty() || self.grid.s_y.is_empty() || self.grid.t_y_points == 0 {
            return bad("search grid must have at least one level per parameter");
        }
        if self.grid.i_stride == 0 {
            return bad("grid i_stride must be >= 1");
        }
        if self.min_samples < 4 {
            return bad("min_samples must be at least 4");
        }
        Ok(())
    }

    /// Extension constants for a reference of length `m` and value range `range`.
    pub fn extension_params(&self, m: usize, range: f64) -> ExtensionParams {
        ExtensionParams {
            amplitude: self.amplitude_frac * range,
            decay_k: self.decay_k,
            num_cycles: self.num_cycles,
            lin_decay_c: self.lin_decay_c,
            short_len: round_half_up(self.short_frac * m as f64).max(1),
            long_len: round_half_up(self.long_frac * m as f64).max(1),
        }
    }
}

/// Result of one match.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProgressEstimate {
    /// Reported progress, non-decreasing within a session.
    pub progress_pct: f64,
    /// Progress of this match alone, before the monotone clamp.
    pub raw_progress_pct: f64,
    /// 1-based window start in the extended reference.
    pub best_i: usize,
    pub params_hat: TransformParams,
    pub window_len: usize,
    pub dtw_cost: f64,
    /// 1-based index into the predicted knee trajectory.
    pub knee_index: usize,
    pub mode: ExtensionMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdateOutcome {
    /// Not enough samples for a match yet.
    Pending,
    Estimate(ProgressEstimate),
}

impl UpdateOutcome {
    pub fn estimate(&self) -> Option<&ProgressEstimate> {
        match self {
            Self::Pending => None,
            Self::Estimate(e) => Some(e),
        }
    }
}

/// `round(progress / 100 * (knee_len - 1)) + 1`.
pub fn map_progress_to_knee_index(progress_pct: f64, knee_len: usize) -> usize {
    let knee_len = knee_len.max(1);
    let p = progress_pct.clamp(0.0, 100.0) / 100.0;
    round_half_up(p * (knee_len - 1) as f64) + 1
}

/// Rule for choosing the transition: short for the first matches, long once
/// progress has stayed above the threshold long enough, and long for good
/// after that.
pub fn select_extension(
    iteration: usize,
    consecutive_over: usize,
    current: ExtensionMode,
    cfg: &EstimatorConfig,
) -> ExtensionMode {
    if current == ExtensionMode::Long {
        return ExtensionMode::Long;
    }
    if iteration < cfg.short_min_iterations {
        return ExtensionMode::Short;
    }
    if consecutive_over >= cfg.long_after_consecutive {
        ExtensionMode::Long
    } else {
        ExtensionMode::Short
    }
}

/// Streaming state for one obstacle-crossing stride. Single writer: feed
/// samples with [`EstimatorSession::update`] in time order.
#[derive(Debug, Clone)]
pub struct EstimatorSession {
    config: EstimatorConfig,
    reference: ReferenceSequence,
    ext_params: ExtensionParams,
    rate_hz: f64,
    knee_len: usize,
    times: Vec<f64>,
    observed: Vec<f64>,
    iteration: usize,
    consecutive_over: usize,
    mode: ExtensionMode,
    last_progress: f64,
}

impl EstimatorSession {
    /// `rate_hz` is the nominal rate of the incoming stream. Matching uses
    /// the timestamps passed to [`EstimatorSession::update`].
    pub fn new(
        reference: ReferenceSequence,
        rate_hz: f64,
        config: EstimatorConfig,
    ) -> Result<Self, EstimatorError> {
        config.validate()?;
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return Err(EstimatorError::InvalidConfig(format!(
                "rate_hz must be positive, got {rate_hz}"
            )));
        }
        let ext_params = config.extension_params(reference.len(), reference.range());
        ext_params.validate()?;
        let knee_len = reference.len();
        Ok(Self {
            config,
            reference,
            ext_params,
            rate_hz,
            knee_len,
            times: Vec::new(),
            observed: Vec::new(),
            iteration: 0,
            consecutive_over: 0,
            mode: ExtensionMode::Short,
            last_progress: 0.0,
        })
    }

    /// Length of the knee trajectory that progress maps onto.
    pub fn with_knee_len(mut self, knee_len: usize) -> Self {
        self.knee_len = knee_len.max(1);
        self
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn reference(&self) -> &ReferenceSequence {
        &self.reference
    }

    pub fn ext_params(&self) -> &ExtensionParams {
        &self.ext_params
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn consecutive_over(&self) -> usize {
        self.consecutive_over
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn mode(&self) -> ExtensionMode {
        self.mode
    }

    pub fn last_progress(&self) -> f64 {
        self.last_progress
    }

    /// Mode the next match will use.
    pub fn select_extension(&self) -> ExtensionMode {
        select_extension(self.iteration, self.consecutive_over, self.mode, &self.config)
    }

    fn extend(&self, seq: &[f64], mode: ExtensionMode) -> Result<Vec<f64>, EstimatorError> {
        let k = self.config.anchor_len.clamp(1, seq.len().max(1));
        if k == 1 {
            return match mode {
                ExtensionMode::Short => extend_sinusoidal(seq, &self.ext_params),
                ExtensionMode::Long => extend_linear(seq, &self.ext_params),
            };
        }
        let b = seq[..k].iter().sum::<f64>() / k as f64;
        let mut out = match mode {
            ExtensionMode::Short => sinusoidal_transition(b, &self.ext_params),
            ExtensionMode::Long => linear_transition(b, initial_slope(seq)?, &self.ext_params),
        };
        out.extend_from_slice(seq);
        Ok(out)
    }

    /// Observed length in reference samples.
    fn comparison_len(&self) -> usize {
        let elapsed = self.times[self.times.len() - 1] - self.times[0];
        let span = (self.reference.len() - 1) as f64;
        round_half_up(elapsed / self.reference.duration_s * span) + 1
    }

    /// Best match of the current observation. Does not change the session.
    pub fn optimize_match(&self) -> Result<ProgressEstimate, EstimatorError> {
        self.match_with_mode(self.select_extension())
    }

    fn match_with_mode(&self, mode: ExtensionMode) -> Result<ProgressEstimate, EstimatorError> {
        if self.observed.len() < self.config.min_samples {
            return Err(EstimatorError::TooShort {
                len: self.observed.len(),
                needed: self.config.min_samples,
            });
        }
        let observed = &self.observed;
        let (cs, n_cs) = if self.config.resample_to_reference_grid {
            let step = self.reference.duration_s / (self.reference.len() - 1) as f64;
            let cs = resample_step(&self.times, observed, step)?;
            if cs.len() < 2 {
                return Err(EstimatorError::TooShort { len: cs.len(), needed: 2 });
            }
            let n_cs = cs.len();
            (cs, n_cs)
        } else {
            let cs = resample_timed(&self.times, observed, self.config.resample_len)?;
            (cs, self.comparison_len())
        };
        let rs = self.reference.values();
        let m = rs.len();
        let l1 = match mode {
            ExtensionMode::Short => self.ext_params.short_len,
            ExtensionMode::Long => self.ext_params.long_len,
        };
        let rs_ext = self.extend(rs, mode)?;
        let cs_ext = self.extend(&cs, mode)?;
        // The oscillation is sized from the reference; in observation units it
        // follows the vertical scale.
        let cs_scaled = match mode {
            ExtensionMode::Short => sinusoidal_transition(0.0, &self.ext_params),
            ExtensionMode::Long => Vec::new(),
        };
        let n = l1 + n_cs;

        let offset = rs[0] - cs[0];
        let cfg = &self.config;
        let bounds = TransformBounds {
            t_y: (offset - cfg.t_y_margin_deg, offset + cfg.t_y_margin_deg),
            s_y: (cfg.s_y_min, cfg.s_y_max),
            s_x: (cfg.s_x_min, cfg.s_x_max),
        };
        let problem = MatchProblem {
            rs_ext: &rs_ext,
            cs_ext: &cs_ext,
            cs_scaled: &cs_scaled,
            m,
            l1,
            n,
            bounds,
            band_frac: (cfg.band_frac > 0.0).then_some(cfg.band_frac),
        };
        let nm = NelderMeadConfig {
            max_evaluations: cfg.nm_max_evaluations,
            ..NelderMeadConfig::default()
        };
        let found = search(&problem, &cfg.grid, nm)?;
        let progress = progress_pct(found.best_i, found.window_len, l1, m);
        Ok(ProgressEstimate {
            progress_pct: progress,
            raw_progress_pct: progress,
            best_i: found.best_i,
            params_hat: found.params,
            window_len: found.window_len,
            dtw_cost: found.cost,
            knee_index: map_progress_to_knee_index(progress, self.knee_len),
            mode,
        })
    }

    /// Appends a sample taken at `t_s` seconds and, once enough samples are
    /// in, runs a match.
    pub fn update(&mut self, t_s: f64, thigh_deg: f64) -> Result<UpdateOutcome, EstimatorError> {
        if !(t_s.is_finite() && thigh_deg.is_finite()) {
            return Err(EstimatorError::InvalidSample(format!(
                "non-finite sample ({t_s}, {thigh_deg})"
            )));
        }
        if let Some(&last) = self.times.last() {
            if t_s <= last {
                return Err(EstimatorError::InvalidSample(format!(
                    "timestamp {t_s} not after {last}"
                )));
            }
        }
        self.times.push(t_s);
        self.observed.push(thigh_deg);
        if self.observed.len() < self.config.min_samples {
            return Ok(UpdateOutcome::Pending);
        }

        let mode = self.select_extension();
        let mut est = self.match_with_mode(mode)?;
        self.mode = mode;
        self.iteration += 1;
        let progress = est.raw_progress_pct.max(self.last_progress);
        if progress > self.config.long_progress_threshold {
            self.consecutive_over += 1;
        } else {
            self.consecutive_over = 0;
        }
        self.last_progress = progress;
        est.progress_pct = progress;
        est.knee_index = map_progress_to_knee_index(progress, self.knee_len);
        Ok(UpdateOutcome::Estimate(est))
    }
}

#[cfg(test)]
mod tests;
