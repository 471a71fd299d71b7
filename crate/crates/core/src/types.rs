//! Shared data types: score series and prediction intervals.

use serde::Serialize;
use thiserror::Error;

/// Errors raised when constructing a [`ScoreSeries`].
#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("score series must contain at least one point")]
    Empty,
    #[error("timestamps must be strictly increasing (violated at index {index})")]
    NonIncreasingTimestamps { index: usize },
    #[error("score {value} at index {index} is outside [0, 1]")]
    ScoreOutOfRange { index: usize, value: f64 },
}

/// Timestamped sequence of bounded quality scores for one agent.
///
/// Timestamps are hours since epoch and strictly increasing; scores lie in
/// `[0, 1]`. Simulated streams use consecutive integer timestamps (one step
/// per hour).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    agent_id: String,
    timestamps: Vec<u64>,
    scores: Vec<f64>,
}

impl ScoreSeries {
    pub fn new(
        agent_id: impl Into<String>,
        points: impl IntoIterator<Item = (u64, f64)>,
    ) -> Result<Self, SeriesError> {
        let mut timestamps = Vec::new();
        let mut scores = Vec::new();
        for (index, (t, s)) in points.into_iter().enumerate() {
            if let Some(&prev) = timestamps.last() {
                if t <= prev {
                    return Err(SeriesError::NonIncreasingTimestamps { index });
                }
            }
            if !(0.0..=1.0).contains(&s) {
                return Err(SeriesError::ScoreOutOfRange { index, value: s });
            }
            timestamps.push(t);
            scores.push(s);
        }
        if timestamps.is_empty() {
            return Err(SeriesError::Empty);
        }
        Ok(Self {
            agent_id: agent_id.into(),
            timestamps,
            scores,
        })
    }

    pub fn agent_id(&self) -> &str {
        &self.agent_id
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one point
    }

    pub fn timestamps(&self) -> &[u64] {
        &self.timestamps
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn last_timestamp(&self) -> u64 {
        *self.timestamps.last().expect("series is nonempty")
    }

    pub fn last_score(&self) -> f64 {
        *self.scores.last().expect("series is nonempty")
    }

    /// Contiguous sub-series over `range` (indices). Panics if the range is
    /// empty or out of bounds; callers validate first.
    pub fn segment(&self, range: std::ops::Range<usize>) -> ScoreSeries {
        assert!(!range.is_empty() && range.end <= self.len());
        ScoreSeries {
            agent_id: self.agent_id.clone(),
            timestamps: self.timestamps[range.clone()].to_vec(),
            scores: self.scores[range].to_vec(),
        }
    }
}

/// How an interval was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalMethod {
    Parametric,
    SplitConformal,
    Aci,
    Mondrian,
    Bootstrap,
}

impl IntervalMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Parametric => "parametric",
            Self::SplitConformal => "split-conformal",
            Self::Aci => "aci",
            Self::Mondrian => "mondrian",
            Self::Bootstrap => "bootstrap",
        }
    }
}

/// A prediction interval around a point estimate.
///
/// `unbounded` is set when the conformal quantile index exceeded the
/// calibration size, in which case the interval spans the full score range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub center: f64,
    pub lower: f64,
    pub upper: f64,
    /// Nominal coverage probability (1 - alpha).
    pub level: f64,
    pub method: IntervalMethod,
    pub unbounded: bool,
}

impl Interval {
    /// Symmetric interval `center ± half_width`, clamped to `bounds`.
    /// An infinite half-width yields the full clamp range with the
    /// unbounded flag set.
    pub fn symmetric(
        center: f64,
        half_width: f64,
        level: f64,
        method: IntervalMethod,
        bounds: (f64, f64),
    ) -> Interval {
        debug_assert!(bounds.0 <= center && center <= bounds.1);
        debug_assert!(half_width >= 0.0);
        if half_width.is_infinite() {
            return Interval {
                center,
                lower: bounds.0,
                upper: bounds.1,
                level,
                method,
                unbounded: true,
            };
        }
        Interval {
            center,
            lower: (center - half_width).max(bounds.0),
            upper: (center + half_width).min(bounds.1),
            level,
            method,
            unbounded: false,
        }
    }

    /// Inclusive membership test.
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Zero-width intervals are valid but flagged for callers that care.
    pub fn is_degenerate(&self) -> bool {
        self.width() == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_rejects_empty() {
        assert_eq!(
            ScoreSeries::new("a", Vec::<(u64, f64)>::new()).unwrap_err(),
            SeriesError::Empty
        );
    }

    #[test]
    fn series_rejects_non_increasing_timestamps() {
        let err = ScoreSeries::new("a", [(0, 0.5), (0, 0.5)]).unwrap_err();
        assert_eq!(err, SeriesError::NonIncreasingTimestamps { index: 1 });
    }

    #[test]
    fn series_rejects_out_of_range_scores() {
        let err = ScoreSeries::new("a", [(0, 1.5)]).unwrap_err();
        assert_eq!(
            err,
            SeriesError::ScoreOutOfRange {
                index: 0,
                value: 1.5
            }
        );
    }

    #[test]
    fn segment_preserves_agent_and_order() {
        let s = ScoreSeries::new("a", [(0, 0.1), (1, 0.2), (2, 0.3)]).unwrap();
        let seg = s.segment(1..3);
        assert_eq!(seg.agent_id(), "a");
        assert_eq!(seg.timestamps(), &[1, 2]);
        assert_eq!(seg.scores(), &[0.2, 0.3]);
    }

    #[test]
    fn interval_contains_its_center_and_clamps() {
        let iv = Interval::symmetric(0.95, 0.2, 0.8, IntervalMethod::SplitConformal, (0.0, 1.0));
        assert!(iv.contains(iv.center));
        assert_eq!(iv.upper, 1.0);
        assert!((iv.lower - 0.75).abs() < 1e-15);
        assert!(!iv.unbounded);
    }

    #[test]
    fn infinite_half_width_spans_bounds() {
        let iv = Interval::symmetric(
            0.5,
            f64::INFINITY,
            0.8,
            IntervalMethod::SplitConformal,
            (0.0, 1.0),
        );
        assert!(iv.unbounded);
        assert_eq!((iv.lower, iv.upper), (0.0, 1.0));
        assert!(!iv.is_degenerate());
    }

    #[test]
    fn zero_width_is_degenerate() {
        let iv = Interval::symmetric(0.4, 0.0, 0.8, IntervalMethod::Parametric, (0.0, 1.0));
        assert!(iv.is_degenerate());
        assert!(iv.contains(0.4));
    }
}
