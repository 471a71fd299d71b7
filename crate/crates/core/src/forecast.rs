//! Mean-reversion point forecasts and Gaussian parametric intervals.
//!
//! The point predictor pulls the current score toward the long-run mean at a
//! fixed hourly rate; the parametric interval assumes Gaussian innovations
//! and scales with the square root of the horizon. Conformal methods wrap
//! this base predictor.

use thiserror::Error;

use crate::stats;
use crate::types::{Interval, IntervalMethod, ScoreSeries};

/// Default per-hour reversion rate.
pub const DEFAULT_REVERSION_RATE: f64 = 0.003;

#[derive(Debug, Error, PartialEq)]
pub enum ForecastError {
    #[error("model estimation needs at least 3 points, got {got}")]
    SeriesTooShort { got: usize },
    #[error("reversion rate must be finite and nonnegative, got {value}")]
    InvalidReversionRate { value: f64 },
    #[error("long-run mean {value} is outside [0, 1]")]
    MeanOutOfRange { value: f64 },
    #[error("innovation scale must be finite and nonnegative, got {value}")]
    InvalidInnovationScale { value: f64 },
    #[error("horizon must be nonnegative, got {value}")]
    NegativeHorizon { value: f64 },
    #[error("interval horizon must be positive, got {value}")]
    NonPositiveHorizon { value: f64 },
    #[error("coverage level must lie in (0, 1), got {value}")]
    InvalidLevel { value: f64 },
}

/// Fitted mean-reversion dynamics for one series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastModel {
    /// Per-hour pull toward the long-run mean.
    pub reversion_rate: f64,
    pub long_run_mean: f64,
    /// Innovation scale in score units per sqrt-hour.
    pub innovation_scale: f64,
}

impl ForecastModel {
    pub fn new(
        reversion_rate: f64,
        long_run_mean: f64,
        innovation_scale: f64,
    ) -> Result<Self, ForecastError> {
        if !(reversion_rate.is_finite() && reversion_rate >= 0.0) {
            return Err(ForecastError::InvalidReversionRate {
                value: reversion_rate,
            });
        }
        if !(0.0..=1.0).contains(&long_run_mean) {
            return Err(ForecastError::MeanOutOfRange {
                value: long_run_mean,
            });
        }
        if !(innovation_scale.is_finite() && innovation_scale >= 0.0) {
            return Err(ForecastError::InvalidInnovationScale {
                value: innovation_scale,
            });
        }
        Ok(Self {
            reversion_rate,
            long_run_mean,
            innovation_scale,
        })
    }
}

/// Fit a model: long-run mean is the series mean, the innovation scale is the
/// sample standard deviation of consecutive score differences, and the
/// reversion rate is the configured constant.
pub fn estimate_model(
    series: &ScoreSeries,
    reversion_rate: f64,
) -> Result<ForecastModel, ForecastError> {
    if series.len() < 3 {
        return Err(ForecastError::SeriesTooShort { got: series.len() });
    }
    let scores = series.scores();
    let diffs: Vec<f64> = scores.windows(2).map(|w| w[1] - w[0]).collect();
    ForecastModel::new(
        reversion_rate,
        stats::mean(scores),
        stats::sample_std(&diffs),
    )
}

/// Forecast `horizon_hours` ahead: `current + rate * (mean - current) * h`,
/// clamped to `[0, 1]`. When `rate * h` exceeds 1 the forecast saturates at
/// the long-run mean instead of overshooting it.
pub fn mean_reversion_forecast(
    current: f64,
    model: &ForecastModel,
    horizon_hours: f64,
) -> Result<f64, ForecastError> {
    if !(horizon_hours.is_finite() && horizon_hours >= 0.0) {
        return Err(ForecastError::NegativeHorizon {
            value: horizon_hours,
        });
    }
    let pull = (model.reversion_rate * horizon_hours).min(1.0);
    let forecast = current + pull * (model.long_run_mean - current);
    Ok(forecast.clamp(0.0, 1.0))
}

/// Gaussian interval around a forecast: half-width `z(level) * scale * sqrt(h)`.
/// A zero innovation scale yields a valid zero-width interval.
pub fn parametric_interval(
    forecast: f64,
    model: &ForecastModel,
    horizon_hours: f64,
    level: f64,
) -> Result<Interval, ForecastError> {
    if !(horizon_hours.is_finite() && horizon_hours > 0.0) {
        return Err(ForecastError::NonPositiveHorizon {
            value: horizon_hours,
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(ForecastError::InvalidLevel { value: level });
    }
    let half_width = stats::two_sided_z(level) * model.innovation_scale * horizon_hours.sqrt();
    Ok(Interval::symmetric(
        forecast,
        half_width,
        level,
        IntervalMethod::Parametric,
        (0.0, 1.0),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ScoreSeries;
    use approx::assert_relative_eq;

    fn series(scores: &[f64]) -> ScoreSeries {
        ScoreSeries::new("a", scores.iter().copied().enumerate().map(|(t, s)| (t as u64, s)))
            .unwrap()
    }

    #[test]
    fn estimate_constant_series() {
        let m = estimate_model(&series(&[0.4, 0.4, 0.4, 0.4]), 0.003).unwrap();
        assert_eq!(m.long_run_mean, 0.4);
        assert_eq!(m.innovation_scale, 0.0);
        assert_eq!(m.reversion_rate, 0.003);
    }

    #[test]
    fn estimate_alternating_series_matches_hand_computation() {
        let m = estimate_model(&series(&[0.4, 0.6, 0.4, 0.6]), 0.003).unwrap();
        assert_relative_eq!(m.long_run_mean, 0.5, epsilon = 1e-12);
        // Differences are {+0.2, -0.2, +0.2}; sample std computed directly.
        let diffs = [0.2, -0.2, 0.2];
        let mean: f64 = diffs.iter().sum::<f64>() / 3.0;
        let var: f64 = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / 2.0;
        assert_relative_eq!(m.innovation_scale, var.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn estimate_rejects_short_series() {
        assert_eq!(
            estimate_model(&series(&[0.4, 0.6]), 0.003),
            Err(ForecastError::SeriesTooShort { got: 2 })
        );
    }

    #[test]
    fn forecast_fixed_point_at_long_run_mean() {
        let m = ForecastModel::new(0.003, 0.5, 0.01).unwrap();
        for h in [0.0, 1.0, 24.0, 72.0] {
            assert_eq!(mean_reversion_forecast(0.5, &m, h).unwrap(), 0.5);
        }
    }

    #[test]
    fn forecast_direct_evaluation() {
        // 0.6 + 0.003 * (0.5 - 0.6) * 24 = 0.5928
        let m = ForecastModel::new(0.003, 0.5, 0.01).unwrap();
        assert_relative_eq!(
            mean_reversion_forecast(0.6, &m, 24.0).unwrap(),
            0.5928,
            epsilon = 1e-12
        );
    }

    #[test]
    fn forecast_zero_horizon_is_identity() {
        let m = ForecastModel::new(0.003, 0.5, 0.01).unwrap();
        assert_eq!(mean_reversion_forecast(0.62, &m, 0.0).unwrap(), 0.62);
    }

    #[test]
    fn forecast_rejects_negative_horizon() {
        let m = ForecastModel::new(0.003, 0.5, 0.01).unwrap();
        assert!(mean_reversion_forecast(0.6, &m, -1.0).is_err());
    }

    #[test]
    fn forecast_saturates_at_mean_past_the_reversion_scale() {
        let m = ForecastModel::new(0.01, 0.5, 0.0).unwrap();
        // rate * h = 2 > 1: clamp at the mean, never overshoot.
        assert_eq!(mean_reversion_forecast(0.9, &m, 200.0).unwrap(), 0.5);
    }

    #[test]
    fn forecast_never_overshoots_within_reversion_scale() {
        let m = ForecastModel::new(0.003, 0.5, 0.0).unwrap();
        for h in [1.0, 24.0, 72.0, 300.0] {
            let f = mean_reversion_forecast(0.9, &m, h).unwrap();
            assert!((0.5..=0.9).contains(&f), "h={h} overshot: {f}");
        }
    }

    #[test]
    fn parametric_half_width_hand_computed() {
        // 1.28 * 0.01 * sqrt(4) = 0.0256
        let m = ForecastModel::new(0.003, 0.5, 0.01).unwrap();
        let iv = parametric_interval(0.5, &m, 4.0, 0.80).unwrap();
        assert_relative_eq!(iv.width(), 2.0 * 0.0256, epsilon = 1e-12);
        assert_eq!(iv.method, IntervalMethod::Parametric);
    }

    #[test]
    fn parametric_zero_scale_is_degenerate_but_valid() {
        let m = ForecastModel::new(0.003, 0.5, 0.0).unwrap();
        let iv = parametric_interval(0.5, &m, 4.0, 0.80).unwrap();
        assert!(iv.is_degenerate());
        assert!(iv.contains(0.5));
    }

    #[test]
    fn parametric_width_scales_with_sqrt_horizon() {
        let m = ForecastModel::new(0.003, 0.5, 0.01).unwrap();
        let w4 = parametric_interval(0.5, &m, 4.0, 0.80).unwrap().width();
        let w16 = parametric_interval(0.5, &m, 16.0, 0.80).unwrap().width();
        assert_relative_eq!(w16, 2.0 * w4, epsilon = 1e-12);
    }

    #[test]
    fn parametric_width_increases_with_level() {
        let m = ForecastModel::new(0.003, 0.5, 0.01).unwrap();
        let mut last = 0.0;
        for level in [0.5, 0.7, 0.8, 0.9, 0.99] {
            let w = parametric_interval(0.5, &m, 4.0, level).unwrap().width();
            assert!(w > last, "width not increasing at level {level}");
            last = w;
        }
    }
}
