//! Split conformal calibration, adaptive conformal inference, Mondrian
//! group-conditional calibration, coverage reporting, and a bootstrap
//! baseline.
//!
//! # Split conformal
//!
//! 1. Split the history chronologically into training and calibration.
//! 2. Nonconformity scores are absolute forecast residuals `|actual - forecast|`.
//! 3. The quantile is the `ceil((1 - alpha) * (n_cal + 1))`-th smallest
//!    residual; if that index exceeds `n_cal` the interval is the full score
//!    range and is flagged unbounded.
//! 4. Interval: `forecast ± quantile`, clamped to `[0, 1]`. Clamping can only
//!    increase empirical coverage.
//!
//! # Adaptive conformal inference
//!
//! The working miscoverage level moves by `step * (target - err_t)` after
//! each observation. It is intentionally unclamped: values at or below zero
//! produce full-range intervals, values at or above one produce zero-width
//! intervals. Clamping would break the telescoping identity
//! `alpha_T - alpha_0 = step * (T * target - sum(err))` that underwrites
//! long-run coverage.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::exec::{derive_seed, indexed_map};
use crate::forecast::{estimate_model, mean_reversion_forecast, ForecastError, ForecastModel};
use crate::stats;
use crate::types::{Interval, IntervalMethod, ScoreSeries};

#[derive(Debug, Error, PartialEq)]
pub enum ConformalError {
    #[error("train fraction must lie in (0, 1), got {value}")]
    InvalidTrainFraction { value: f64 },
    #[error("chronological split left an empty {segment} segment")]
    EmptySplitSegment { segment: &'static str },
    #[error("actuals and forecasts differ in length: {actuals} vs {forecasts}")]
    LengthMismatch { actuals: usize, forecasts: usize },
    #[error("calibration set must be nonempty")]
    EmptyCalibration,
    #[error("residual {value} is negative or not finite")]
    InvalidResidual { value: f64 },
    #[error("miscoverage alpha must lie in (0, 1), got {value}")]
    InvalidAlpha { value: f64 },
    #[error("ACI step size must be positive and finite, got {value}")]
    InvalidStepSize { value: f64 },
    #[error("forecast {value} lies outside the interval bounds [{lo}, {hi}]")]
    ForecastOutOfBounds { value: f64, lo: f64, hi: f64 },
    #[error("stratum threshold must be positive, got {value}")]
    InvalidThreshold { value: f64 },
    #[error("agent {agent_id} has no residuals")]
    EmptyAgentResiduals { agent_id: String },
    #[error("no agents supplied for stratified calibration")]
    NoAgents,
    #[error("coverage report inputs differ in length")]
    ReportLengthMismatch,
    #[error("horizon must be at least 1 step, got {value}")]
    InvalidHorizon { value: usize },
    #[error("train length {train_len} leaves no calibration points (series length {len})")]
    NoCalibrationPoints { train_len: usize, len: usize },
    #[error("history too short for a bootstrap baseline: {got} residuals, need {need}")]
    InsufficientHistory { got: usize, need: usize },
    #[error("need at least 100 resamples, got {got}")]
    TooFewResamples { got: usize },
    #[error("coverage level must lie in (0, 1), got {value}")]
    InvalidLevel { value: f64 },
    #[error(transparent)]
    Forecast(#[from] ForecastError),
}

/// Sorted nonconformity residuals with optional split provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSet {
    residuals: Vec<f64>,
    train_fraction: Option<f64>,
}

impl CalibrationSet {
    /// Sorts the residuals; rejects empty sets and negative or non-finite
    /// values.
    pub fn new(mut residuals: Vec<f64>) -> Result<Self, ConformalError> {
        if residuals.is_empty() {
            return Err(ConformalError::EmptyCalibration);
        }
        if let Some(&bad) = residuals.iter().find(|r| !r.is_finite() || **r < 0.0) {
            return Err(ConformalError::InvalidResidual { value: bad });
        }
        stats::sort_ascending(&mut residuals);
        Ok(Self {
            residuals,
            train_fraction: None,
        })
    }

    pub fn with_train_fraction(mut self, fraction: f64) -> Self {
        self.train_fraction = Some(fraction);
        self
    }

    pub fn n_cal(&self) -> usize {
        self.residuals.len()
    }

    /// Residuals in ascending order.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn train_fraction(&self) -> Option<f64> {
        self.train_fraction
    }

    /// Merge several calibration sets into one pooled set.
    pub fn pooled<'a>(
        sets: impl IntoIterator<Item = &'a CalibrationSet>,
    ) -> Result<CalibrationSet, ConformalError> {
        let mut residuals = Vec::new();
        for set in sets {
            residuals.extend_from_slice(&set.residuals);
        }
        CalibrationSet::new(residuals)
    }

    /// Count of residuals greater than or equal to `threshold`.
    pub fn count_at_least(&self, threshold: f64) -> usize {
        self.residuals.len() - self.residuals.partition_point(|r| *r < threshold)
    }
}

/// Chronological split: the first `floor(n * fraction)` points train, the
/// remainder calibrate. No shuffling; the data is a time series.
pub fn split_history(
    series: &ScoreSeries,
    train_fraction: f64,
) -> Result<(ScoreSeries, ScoreSeries), ConformalError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(ConformalError::InvalidTrainFraction {
            value: train_fraction,
        });
    }
    let n = series.len();
    let train_len = (n as f64 * train_fraction).floor() as usize;
    if train_len == 0 {
        return Err(ConformalError::EmptySplitSegment { segment: "train" });
    }
    if train_len >= n {
        return Err(ConformalError::EmptySplitSegment {
            segment: "calibration",
        });
    }
    Ok((
        series.segment(0..train_len),
        series.segment(train_len..n),
    ))
}

/// Absolute residuals `|actual - forecast|`, sorted ascending.
pub fn nonconformity_scores(
    actuals: &[f64],
    forecasts: &[f64],
) -> Result<CalibrationSet, ConformalError> {
    if actuals.len() != forecasts.len() {
        return Err(ConformalError::LengthMismatch {
            actuals: actuals.len(),
            forecasts: forecasts.len(),
        });
    }
    if actuals.is_empty() {
        return Err(ConformalError::EmptyCalibration);
    }
    CalibrationSet::new(
        actuals
            .iter()
            .zip(forecasts)
            .map(|(a, f)| (a - f).abs())
            .collect(),
    )
}

/// A conformal quantile, or the unbounded flag when the order-statistic index
/// exceeds the calibration size (the interval then spans the full range).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalQuantile {
    pub value: f64,
    pub unbounded: bool,
}

impl ConformalQuantile {
    fn half_width(&self) -> f64 {
        if self.unbounded {
            f64::INFINITY
        } else {
            self.value
        }
    }
}

/// The `ceil((1 - alpha) * (n_cal + 1))`-th smallest residual.
pub fn conformal_quantile(
    cal: &CalibrationSet,
    alpha: f64,
) -> Result<ConformalQuantile, ConformalError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ConformalError::InvalidAlpha { value: alpha });
    }
    let n = cal.n_cal();
    let k = ((1.0 - alpha) * (n as f64 + 1.0)).ceil() as usize;
    if k > n {
        Ok(ConformalQuantile {
            value: f64::INFINITY,
            unbounded: true,
        })
    } else {
        Ok(ConformalQuantile {
            value: cal.residuals[k - 1],
            unbounded: false,
        })
    }
}

/// Symmetric conformal interval `forecast ± quantile`, clamped to `[0, 1]`.
pub fn conformal_interval(
    forecast: f64,
    cal: &CalibrationSet,
    alpha: f64,
) -> Result<Interval, ConformalError> {
    conformal_interval_within(forecast, cal, alpha, (0.0, 1.0))
}

/// Conformal interval clamped to caller-supplied bounds; used for score
/// differences, which live in `[-1, 1]`.
pub fn conformal_interval_within(
    forecast: f64,
    cal: &CalibrationSet,
    alpha: f64,
    bounds: (f64, f64),
) -> Result<Interval, ConformalError> {
    if !(bounds.0 <= forecast && forecast <= bounds.1) {
        return Err(ConformalError::ForecastOutOfBounds {
            value: forecast,
            lo: bounds.0,
            hi: bounds.1,
        });
    }
    let q = conformal_quantile(cal, alpha)?;
    Ok(Interval::symmetric(
        forecast,
        q.half_width(),
        1.0 - alpha,
        IntervalMethod::SplitConformal,
        bounds,
    ))
}

/// Online miscoverage tracker for adaptive conformal inference.
///
/// The working level is derived from integer step and error counters, which
/// is arithmetically identical to applying the update sequentially but keeps
/// the telescoping identity exact instead of accumulating rounding error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AciState {
    target_alpha: f64,
    step_size: f64,
    error_count: u64,
    steps: u64,
}

impl AciState {
    pub fn new(target_alpha: f64, step_size: f64) -> Result<Self, ConformalError> {
        if !(target_alpha > 0.0 && target_alpha < 1.0) {
            return Err(ConformalError::InvalidAlpha {
                value: target_alpha,
            });
        }
        if !(step_size.is_finite() && step_size > 0.0) {
            return Err(ConformalError::InvalidStepSize { value: step_size });
        }
        Ok(Self {
            target_alpha,
            step_size,
            error_count: 0,
            steps: 0,
        })
    }

    /// Working miscoverage level; may leave (0, 1).
    pub fn working_alpha(&self) -> f64 {
        self.target_alpha
            + self.step_size
                * (self.steps as f64 * self.target_alpha - self.error_count as f64)
    }

    pub fn target_alpha(&self) -> f64 {
        self.target_alpha
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn error_count(&self) -> u64 {
        self.error_count
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Observe one coverage outcome:
    /// `alpha <- alpha + step * (target - err)` with `err = 1` on a miss.
    pub fn update(&mut self, covered: bool) {
        self.error_count += u64::from(!covered);
        self.steps += 1;
    }

    /// Empirical miscoverage rate observed so far.
    pub fn miscoverage_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.error_count as f64 / self.steps as f64
        }
    }
}

/// Interval at the current working miscoverage level. A working level at or
/// below zero yields the full range; at or above one, a zero-width interval.
/// The reported level stays the nominal target.
pub fn aci_interval(
    forecast: f64,
    cal: &CalibrationSet,
    state: &AciState,
) -> Result<Interval, ConformalError> {
    let level = 1.0 - state.target_alpha();
    let alpha = state.working_alpha();
    let half_width = if alpha <= 0.0 {
        f64::INFINITY
    } else if alpha >= 1.0 {
        0.0
    } else {
        conformal_quantile(cal, alpha)?.half_width()
    };
    let mut interval =
        Interval::symmetric(forecast, half_width, level, IntervalMethod::Aci, (0.0, 1.0));
    interval.method = IntervalMethod::Aci;
    Ok(interval)
}

/// Volatility stratum, split on cross-source divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stratum {
    Stable,
    Volatile,
}

impl Stratum {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Stable => "stable",
            Self::Volatile => "volatile",
        }
    }
}

/// One agent's calibration residuals plus its divergence value.
#[derive(Debug, Clone)]
pub struct AgentResiduals {
    pub agent_id: String,
    pub sigma_cross: f64,
    pub residuals: Vec<f64>,
}

/// Per-stratum calibration sets produced by [`mondrian_calibrate`].
#[derive(Debug, Clone)]
pub struct StratumMap {
    threshold: f64,
    stable: CalibrationSet,
    volatile: CalibrationSet,
    stable_fallback: bool,
    volatile_fallback: bool,
}

impl StratumMap {
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Stratum for a divergence value: at or above the threshold is volatile.
    pub fn stratum_for(&self, sigma_cross: f64) -> Stratum {
        if sigma_cross >= self.threshold {
            Stratum::Volatile
        } else {
            Stratum::Stable
        }
    }

    pub fn calibration(&self, stratum: Stratum) -> &CalibrationSet {
        match stratum {
            Stratum::Stable => &self.stable,
            Stratum::Volatile => &self.volatile,
        }
    }

    /// True when the stratum had no agents and fell back to the pooled set.
    pub fn used_fallback(&self, stratum: Stratum) -> bool {
        match stratum {
            Stratum::Stable => self.stable_fallback,
            Stratum::Volatile => self.volatile_fallback,
        }
    }

    /// Quantile served from the stratum the divergence value maps to, tagged
    /// as a Mondrian interval by [`mondrian_interval`].
    pub fn quantile(
        &self,
        sigma_cross: f64,
        alpha: f64,
    ) -> Result<ConformalQuantile, ConformalError> {
        conformal_quantile(self.calibration(self.stratum_for(sigma_cross)), alpha)
    }
}

/// Pool residuals within each stratum. An empty stratum falls back to the
/// pooled calibration set over all agents and is flagged.
pub fn mondrian_calibrate(
    agents: &[AgentResiduals],
    threshold: f64,
) -> Result<StratumMap, ConformalError> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(ConformalError::InvalidThreshold { value: threshold });
    }
    if agents.is_empty() {
        return Err(ConformalError::NoAgents);
    }
    let mut stable = Vec::new();
    let mut volatile = Vec::new();
    let mut pooled = Vec::new();
    for agent in agents {
        if agent.residuals.is_empty() {
            return Err(ConformalError::EmptyAgentResiduals {
                agent_id: agent.agent_id.clone(),
            });
        }
        pooled.extend_from_slice(&agent.residuals);
        if agent.sigma_cross >= threshold {
            volatile.extend_from_slice(&agent.residuals);
        } else {
            stable.extend_from_slice(&agent.residuals);
        }
    }
    let pooled = CalibrationSet::new(pooled)?;
    let stable_fallback = stable.is_empty();
    let volatile_fallback = volatile.is_empty();
    Ok(StratumMap {
        threshold,
        stable: if stable_fallback {
            pooled.clone()
        } else {
            CalibrationSet::new(stable)?
        },
        volatile: if volatile_fallback {
            pooled
        } else {
            CalibrationSet::new(volatile)?
        },
    stable_fallback,
        volatile_fallback,
    })
}

/// Mondrian interval: split-conformal machinery with the stratum's pooled
/// calibration set.
pub fn mondrian_interval(
    forecast: f64,
    map: &StratumMap,
    sigma_cross: f64,
    alpha: f64,
) -> Result<Interval, ConformalError> {
    let q = map.quantile(sigma_cross, alpha)?;
    Ok(Interval::symmetric(
        forecast,
        q.half_width(),
        1.0 - alpha,
        IntervalMethod::Mondrian,
        (0.0, 1.0),
    ))
}

/// One row of a coverage table.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub group: String,
    pub n: usize,
    pub coverage: f64,
    pub mean_width: f64,
}

/// Empirical coverage and mean width per group. Rows come back sorted by
/// group key; groups with no observations simply do not appear.
pub fn coverage_report(
    intervals: &[Interval],
    actuals: &[f64],
    groups: &[String],
) -> Result<Vec<CoverageRow>, ConformalError> {
    if intervals.len() != actuals.len() || intervals.len() != groups.len() {
        return Err(ConformalError::ReportLengthMismatch);
    }
    let mut acc: std::collections::BTreeMap<&str, (usize, usize, f64)> =
        std::collections::BTreeMap::new();
    for ((interval, &actual), group) in intervals.iter().zip(actuals).zip(groups) {
        let entry = acc.entry(group.as_str()).or_insert((0, 0, 0.0));
        entry.0 += 1;
        entry.1 += usize::from(interval.contains(actual));
        entry.2 += interval.width();
    }
    Ok(acc
        .into_iter()
        .map(|(group, (n, covered, width_sum))| CoverageRow {
            group: group.to_string(),
            n,
            coverage: covered as f64 / n as f64,
            mean_width: width_sum / n as f64,
        })
        .collect())
}

/// Rolling-origin residuals for the calibration segment: for each index `i`
/// at or past `train_len`, forecast from the observation `horizon_steps`
/// earlier (over the actual timestamp gap) and record `|actual - forecast|`.
pub fn forecast_calibration(
    series: &ScoreSeries,
    model: &ForecastModel,
    train_len: usize,
    horizon_steps: usize,
) -> Result<CalibrationSet, ConformalError> {
    let (actuals, forecasts) = rolling_residual_pairs(series, model, train_len, horizon_steps)?;
    nonconformity_scores(&actuals, &forecasts)
}

fn rolling_residual_pairs(
    series: &ScoreSeries,
    model: &ForecastModel,
    start: usize,
    horizon_steps: usize,
) -> Result<(Vec<f64>, Vec<f64>), ConformalError> {
    if horizon_steps == 0 {
        return Err(ConformalError::InvalidHorizon { value: 0 });
    }
    let n = series.len();
    let first = start.max(horizon_steps);
    if first >= n {
        return Err(ConformalError::NoCalibrationPoints {
            train_len: start,
            len: n,
        });
    }
    let scores = series.scores();
    let times = series.timestamps();
    let mut actuals = Vec::with_capacity(n - first);
    let mut forecasts = Vec::with_capacity(n - first);
    for i in first..n {
        let origin = i - horizon_steps;
        let hours = (times[i] - times[origin]) as f64;
        forecasts.push(mean_reversion_forecast(scores[origin], model, hours)?);
        actuals.push(scores[i]);
    }
    Ok((actuals, forecasts))
}

/// Signed h-step residuals over the whole history, resampled into percentile
/// offsets around a point forecast.
///
/// Returns `(lower_offset, upper_offset)` relative to the point forecast.
pub fn bootstrap_residual_band(
    history: &ScoreSeries,
    model: &ForecastModel,
    horizon_steps: usize,
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64), ConformalError> {
    if resamples < 100 {
        return Err(ConformalError::TooFewResamples { got: resamples });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(ConformalError::InvalidLevel { value: level });
    }
    let (actuals, forecasts) = rolling_residual_pairs(history, model, 0, horizon_steps)?;
    let residuals: Vec<f64> = actuals
        .iter()
        .zip(&forecasts)
        .map(|(a, f)| a - f)
        .collect();
    if residuals.len() < 2 {
        return Err(ConformalError::InsufficientHistory {
            got: residuals.len(),
            need: 2,
        });
    }
    let mut draws = indexed_map(resamples, |i| {
        let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, i as u64));
        residuals[rng.random_range(0..residuals.len())]
    });
    stats::sort_ascending(&mut draws);
    Ok((
        stats::percentile_sorted(&draws, (1.0 - level) / 2.0),
        stats::percentile_sorted(&draws, (1.0 + level) / 2.0),
    ))
}

/// Bootstrap baseline interval: the point forecast from the last observation
/// plus percentile offsets of resampled h-step residuals.
pub fn bootstrap_interval(
    history: &ScoreSeries,
    horizon_steps: usize,
    resamples: usize,
    level: f64,
    reversion_rate: f64,
    seed: u64,
) -> Result<Interval, ConformalError> {
    let model = estimate_model(history, reversion_rate)?;
    let (lo, hi) = bootstrap_residual_band(history, &model, horizon_steps, resamples, level, seed)?;
    let gap = horizon_steps as f64;
    let forecast = mean_reversion_forecast(history.last_score(), &model, gap)?;
    Ok(Interval {
        center: forecast,
        lower: (forecast + lo).clamp(0.0, 1.0).min(forecast),
        upper: (forecast + hi).clamp(0.0, 1.0).max(forecast),
        level,
        method: IntervalMethod::Bootstrap,
        unbounded: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::{gen_stream, StreamSpec};
    use approx::assert_relative_eq;

    fn series(scores: &[f64]) -> ScoreSeries {
        ScoreSeries::new("a", scores.iter().copied().enumerate().map(|(t, s)| (t as u64, s)))
            .unwrap()
    }

    fn cal(residuals: &[f64]) -> CalibrationSet {
        CalibrationSet::new(residuals.to_vec()).unwrap()
    }

    #[test]
    fn split_floor_arithmetic() {
        let s = series(&[0.1; 10].map(|_| 0.5));
        let (train, calib) = split_history(&s, 0.7).unwrap();
        assert_eq!((train.len(), calib.len()), (7, 3));
    }

    #[test]
    fn split_hundred_points_is_seventy_thirty() {
        let s = series(&vec![0.5; 100]);
        let (train, calib) = split_history(&s, 0.7).unwrap();
        assert_eq!((train.len(), calib.len()), (70, 30));
    }

    #[test]
    fn split_rejects_single_point() {
        let s = series(&[0.5]);
        assert!(split_history(&s, 0.7).is_err());
    }

    #[test]
    fn split_is_chronological() {
        let s = series(&[0.1, 0.2, 0.3, 0.4, 0.5]);
        let (train, calib) = split_history(&s, 0.7).unwrap();
        assert_eq!(train.scores(), &[0.1, 0.2, 0.3]);
        assert_eq!(calib.scores(), &[0.4, 0.5]);
    }

    #[test]
    fn nonconformity_zero_when_exact() {
        let set = nonconformity_scores(&[0.5, 0.7], &[0.5, 0.7]).unwrap();
        assert_eq!(set.residuals(), &[0.0, 0.0]);
    }

    #[test]
    fn nonconformity_sorted_absolute_differences() {
        let set = nonconformity_scores(&[0.5, 0.7], &[0.4, 0.9]).unwrap();
        let r = set.residuals();
        assert_relative_eq!(r[0], 0.1, epsilon = 1e-12);
        assert_relative_eq!(r[1], 0.2, epsilon = 1e-12);
    }

    #[test]
    fn nonconformity_single_pair() {
        let set = nonconformity_scores(&[0.5], &[0.6]).unwrap();
        assert_relative_eq!(set.residuals()[0], 0.1, epsilon = 1e-12);
    }

    #[test]
    fn nonconformity_rejects_length_mismatch() {
        assert!(matches!(
            nonconformity_scores(&[0.5], &[0.5, 0.6]),
            Err(ConformalError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn quantile_order_statistic_example() {
        // n = 10, alpha = 0.2: k = ceil(8.8) = 9 -> ninth smallest.
        let residuals: Vec<f64> = (1..=10).map(|i| i as f64 / 100.0).collect();
        let q = conformal_quantile(&cal(&residuals), 0.2).unwrap();
        assert!(!q.unbounded);
        assert_relative_eq!(q.value, 0.09, epsilon = 1e-12);
    }

    #[test]
    fn quantile_unbounded_when_index_exceeds_n() {
        // n = 1, alpha = 0.2: k = ceil(1.6) = 2 > 1.
        let q = conformal_quantile(&cal(&[0.3]), 0.2).unwrap();
        assert!(q.unbounded);
    }

    #[test]
    fn quantile_constant_residuals() {
        let q = conformal_quantile(&cal(&[0.07; 20]), 0.5).unwrap();
        assert_eq!(q.value, 0.07);
    }

    #[test]
    fn quantile_nondecreasing_as_alpha_shrinks() {
        let residuals: Vec<f64> = (1..=50).map(|i| i as f64 / 50.0).collect();
        let set = cal(&residuals);
        let mut last = 0.0;
        for alpha in [0.5, 0.3, 0.2, 0.1, 0.05] {
            let q = conformal_quantile(&set, alpha).unwrap();
            if q.unbounded {
                break;
            }
            assert!(q.value >= last);
            last = q.value;
        }
    }

    #[test]
    fn interval_zero_quantile_is_degenerate() {
        let iv = conformal_interval(0.5, &cal(&[0.0; 9]), 0.5).unwrap();
        assert!(iv.is_degenerate());
    }

    #[test]
    fn interval_from_quantile_example() {
        let residuals: Vec<f64> = (1..=10).map(|i| i as f64 / 100.0).collect();
        let iv = conformal_interval(0.5, &cal(&residuals), 0.2).unwrap();
        assert_relative_eq!(iv.lower, 0.41, epsilon = 1e-12);
        assert_relative_eq!(iv.upper, 0.59, epsilon = 1e-12);
        assert_eq!(iv.method, IntervalMethod::SplitConformal);
    }

    #[test]
    fn interval_unbounded_spans_unit_range() {
        let iv = conformal_interval(0.5, &cal(&[0.3]), 0.2).unwrap();
        assert!(iv.unbounded);
        assert_eq!((iv.lower, iv.upper), (0.0, 1.0));
    }

    #[test]
    fn aci_update_arithmetic() {
        let mut miss = AciState::new(0.2, 0.01).unwrap();
        miss.update(false);
        assert_relative_eq!(miss.working_alpha(), 0.192, epsilon = 1e-12);

        let mut cover = AciState::new(0.2, 0.01).unwrap();
        cover.update(true);
        assert_relative_eq!(cover.working_alpha(), 0.202, epsilon = 1e-12);
    }

    #[test]
    fn aci_telescoping_identity_exact() {
        let mut state = AciState::new(0.2, 0.01).unwrap();
        let start = state.working_alpha();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..4000 {
            state.update(rng.random::<f64>() < 0.8);
        }
        let lhs = state.working_alpha() - start;
        let rhs = state.step_size()
            * (state.steps() as f64 * state.target_alpha() - state.error_count() as f64);
        assert!((lhs - rhs).abs() <= 1e-12, "telescoping broke: {lhs} vs {rhs}");
    }

    #[test]
    fn aci_nonpositive_working_alpha_gives_full_range() {
        let mut state = AciState::new(0.2, 0.5).unwrap();
        state.update(false); // alpha = 0.2 + 0.5 * (0.2 - 1) = -0.2
        assert!(state.working_alpha() <= 0.0);
        let iv = aci_interval(0.5, &cal(&[0.01, 0.02]), &state).unwrap();
        assert!(iv.unbounded);
        assert_eq!((iv.lower, iv.upper), (0.0, 1.0));
    }

    #[test]
    fn aci_working_alpha_above_one_gives_zero_width() {
        let mut state = AciState::new(0.8, 2.0).unwrap();
        state.update(true); // alpha = 0.8 + 2 * 0.8 = 2.4
        assert!(state.working_alpha() >= 1.0);
        let iv = aci_interval(0.5, &cal(&[0.01, 0.02]), &state).unwrap();
        assert!(iv.is_degenerate());
    }

    #[test]
    fn aci_at_target_matches_split_conformal() {
        let residuals: Vec<f64> = (1..=40).map(|i| i as f64 / 40.0).collect();
        let set = cal(&residuals);
        let state = AciState::new(0.2, 0.01).unwrap();
        let aci = aci_interval(0.6, &set, &state).unwrap();
        let split = conformal_interval(0.6, &set, 0.2).unwrap();
        assert_eq!(aci.lower, split.lower);
        assert_eq!(aci.upper, split.upper);
        assert_eq!(aci.method, IntervalMethod::Aci);
    }

    #[test]
    fn aci_long_run_miscoverage_tracks_target() {
        // Simulation oracle: forecasts are always 0.5, residual distribution
        // exceeds the calibrated quantile at a rate forced back to alpha.
        let residuals: Vec<f64> = (1..=500).map(|i| 0.1 * i as f64 / 500.0).collect();
        let set = cal(&residuals);
        let mut state = AciState::new(0.2, 0.02).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..6000 {
            let alpha = state.working_alpha();
            let hw = if alpha <= 0.0 {
                f64::INFINITY
            } else if alpha >= 1.0 {
                0.0
            } else {
                conformal_quantile(&set, alpha).unwrap().half_width()
            };
            // Residual draws are 20% heavier than calibration.
            let draw = 0.12 * rng.random::<f64>();
            state.update(draw <= hw);
        }
        assert!(
            (state.miscoverage_rate() - 0.2).abs() <= 0.02,
            "long-run miscoverage {} drifted from target",
            state.miscoverage_rate()
        );
    }

    #[test]
    fn mondrian_all_stable_matches_pooled() {
        let agents = vec![
            AgentResiduals {
                agent_id: "a".into(),
                sigma_cross: 0.01,
                residuals: vec![0.01, 0.02, 0.03],
            },
            AgentResiduals {
                agent_id: "b".into(),
                sigma_cross: 0.02,
                residuals: vec![0.015, 0.025],
            },
        ];
        let map = mondrian_calibrate(&agents, 0.04).unwrap();
        let pooled = CalibrationSet::new(vec![0.01, 0.02, 0.03, 0.015, 0.025]).unwrap();
        assert_eq!(map.calibration(Stratum::Stable).residuals(), pooled.residuals());
        assert!(map.used_fallback(Stratum::Volatile));
        assert_eq!(
            map.calibration(Stratum::Volatile).residuals(),
            pooled.residuals()
        );
    }

    #[test]
    fn mondrian_volatile_quantile_dominates_stable() {
        // Order-statistic comparison: residual scales 0.01 vs 0.05.
        let agents = vec![
            AgentResiduals {
                agent_id: "s".into(),
                sigma_cross: 0.01,
                residuals: (1..=100).map(|i| 0.01 * i as f64 / 100.0).collect(),
            },
            AgentResiduals {
                agent_id: "v".into(),
                sigma_cross: 0.08,
                residuals: (1..=100).map(|i| 0.05 * i as f64 / 100.0).collect(),
            },
        ];
        let map = mondrian_calibrate(&agents, 0.04).unwrap();
        for alpha in [0.1, 0.2, 0.3, 0.5] {
            let qs = map.quantile(0.01, alpha).unwrap();
            let qv = map.quantile(0.08, alpha).unwrap();
            assert!(qv.value > qs.value, "alpha={alpha}");
        }
    }

    #[test]
    fn mondrian_rejects_empty_agent() {
        let agents = vec![AgentResiduals {
            agent_id: "a".into(),
            sigma_cross: 0.01,
            residuals: vec![],
        }];
        assert!(matches!(
            mondrian_calibrate(&agents, 0.04),
            Err(ConformalError::EmptyAgentResiduals { .. })
        ));
    }

    #[test]
    fn coverage_report_full_range_and_zero_width() {
        let full = Interval::symmetric(
            0.5,
            f64::INFINITY,
            0.8,
            IntervalMethod::SplitConformal,
            (0.0, 1.0),
        );
        let point = Interval::symmetric(0.2, 0.0, 0.8, IntervalMethod::SplitConformal, (0.0, 1.0));
        let rows = coverage_report(
            &[full, full, point, point],
            &[0.1, 0.9, 0.5, 0.7],
            &["g1".into(), "g1".into(), "g2".into(), "g2".into()],
        )
        .unwrap();
        assert_eq!(rows[0].coverage, 1.0);
        assert_eq!(rows[1].coverage, 0.0);
        assert_eq!(rows[0].group, "g1");
        assert_eq!(rows[1].mean_width, 0.0);
    }

    #[test]
    fn bootstrap_constant_history_zero_width() {
        let s = series(&vec![0.5; 50]);
        let iv = bootstrap_interval(&s, 4, 200, 0.8, 0.003, 7).unwrap();
        assert!(iv.is_degenerate());
        assert_eq!(iv.center, 0.5);
    }

    #[test]
    fn bootstrap_coverage_near_nominal_on_stationary_stream() {
        // Monte Carlo oracle at a 24-step horizon equivalent.
        let mut covered = 0;
        let trials = 60;
        let horizon = 24;
        for trial in 0..trials {
            let spec = StreamSpec::new(
                format!("t{trial}"),
                0.5,
                0.02,
                0.004,
                700,
                0.5,
                derive_seed(31, trial),
            )
            .unwrap();
            let s = gen_stream(&spec);
            let history = s.segment(0..600);
            let iv = bootstrap_interval(&history, horizon, 400, 0.8, 0.02, derive_seed(32, trial))
                .unwrap();
            let actual = s.scores()[600 - 1 + horizon];
            covered += usize::from(iv.contains(actual));
        }
        let rate = covered as f64 / trials as f64;
        assert!(
            (rate - 0.8).abs() <= 0.12,
            "bootstrap coverage {rate} too far from 0.8"
        );
    }

    #[test]
    fn forecast_calibration_requires_points_past_train() {
        let s = series(&[0.5, 0.6, 0.4]);
        let model = ForecastModel::new(0.003, 0.5, 0.01).unwrap();
        assert!(matches!(
            forecast_calibration(&s, &model, 3, 1),
            Err(ConformalError::NoCalibrationPoints { .. })
        ));
    }
}
