//! Pairwise score-difference intervals, abstention decisions, conformal
//! p-values, Benjamini-Hochberg FDR correction, and leaderboard assembly.
//!
//! For agents `a < b` (canonical id order) the score difference
//! `delta_t = score_a(t) - score_b(t)` is forecast with the same
//! mean-reversion model used for single streams, applied to the difference
//! series. The pair is ranked only when the conformal interval for the
//! difference excludes zero; otherwise it abstains. A rank-based conformal
//! p-value for the zero-difference null feeds the BH correction for
//! leaderboard-scale multiple testing.
//!
//! By default the difference model uses full per-step reversion
//! (`reversion_rate = 1`), so the difference forecast is the estimated
//! long-run mean difference and the calibration residuals are deviations of
//! observed differences around it. That keeps the p-value super-uniform
//! under the zero-difference null; a slower rate would let the forecast
//! track transient swings and overstate significance.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::conformal::{
    conformal_interval_within, CalibrationSet, ConformalError,
};
use crate::exec::indexed_map;
use crate::forecast::{mean_reversion_forecast, ForecastError, ForecastModel};
use crate::stats;
use crate::types::{Interval, ScoreSeries, SeriesError};

#[derive(Debug, Error, PartialEq)]
pub enum RankError {
    #[error("a pair needs two distinct agents, got {agent_id} twice")]
    SameAgent { agent_id: String },
    #[error("difference series needs at least 2 common timestamps, got {got}")]
    TooFewCommonPoints { got: usize },
    #[error("train fraction must lie in (0, 1), got {value}")]
    InvalidTrainFraction { value: f64 },
    #[error("delta reversion rate must be finite and nonnegative, got {value}")]
    InvalidReversionRate { value: f64 },
    #[error("delta horizon must be positive and finite, got {value}")]
    InvalidHorizon { value: f64 },
    #[error("alpha must lie in (0, 1), got {value}")]
    InvalidAlpha { value: f64 },
    #[error("target FDR q must lie in (0, 1), got {value}")]
    InvalidQ { value: f64 },
    #[error("p-value {value} is outside [0, 1]")]
    InvalidPValue { value: f64 },
    #[error("missing decision for pair ({a}, {b})")]
    MissingPairDecision { a: String, b: String },
    #[error("decision set references agent {agent_id} absent from the leaderboard")]
    UnknownAgent { agent_id: String },
    #[error(transparent)]
    Conformal(#[from] ConformalError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Canonically ordered pair of distinct agent ids (`a < b`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PairKey {
    a: String,
    b: String,
}

impl PairKey {
    pub fn new(x: impl Into<String>, y: impl Into<String>) -> Result<Self, RankError> {
        let x = x.into();
        let y = y.into();
        match x.cmp(&y) {
            std::cmp::Ordering::Less => Ok(Self { a: x, b: y }),
            std::cmp::Ordering::Greater => Ok(Self { a: y, b: x }),
            std::cmp::Ordering::Equal => Err(RankError::SameAgent { agent_id: x }),
        }
    }

    pub fn a(&self) -> &str {
        &self.a
    }

    pub fn b(&self) -> &str {
        &self.b
    }
}

/// Outcome for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RankOutcome {
    RankedAAbove,
    RankedBAbove,
    Abstain,
}

impl RankOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::RankedAAbove => "ranked_a_above",
            Self::RankedBAbove => "ranked_b_above",
            Self::Abstain => "abstain",
        }
    }

    pub fn is_ranked(self) -> bool {
        self != Self::Abstain
    }
}

/// Decision for one pair: interval, p-value, and ranked/abstain outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankDecision {
    pub pair: PairKey,
    /// Estimated score difference a - b.
    pub delta_estimate: f64,
    pub interval: Interval,
    pub p_value: f64,
    pub decision: RankOutcome,
    pub fdr_adjusted: bool,
}

/// Parameters of the difference-series model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaConfig {
    pub train_fraction: f64,
    /// Per-hour reversion of the difference model. The default of 1.0 pins
    /// forecasts to the estimated long-run difference.
    pub reversion_rate: f64,
    /// Horizon (hours) of the point estimate for a pair.
    pub horizon_hours: f64,
}

impl Default for DeltaConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            reversion_rate: 1.0,
            horizon_hours: 1.0,
        }
    }
}

impl DeltaConfig {
    fn validate(&self) -> Result<(), RankError> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(RankError::InvalidTrainFraction {
                value: self.train_fraction,
            });
        }
        if !(self.reversion_rate.is_finite() && self.reversion_rate >= 0.0) {
            return Err(RankError::InvalidReversionRate {
                value: self.reversion_rate,
            });
        }
        if !(self.horizon_hours.is_finite() && self.horizon_hours > 0.0) {
            return Err(RankError::InvalidHorizon {
                value: self.horizon_hours,
            });
        }
        Ok(())
    }
}

/// Difference series over the intersection of the two time grids:
/// `(timestamps, score_a - score_b)`.
pub fn difference_series(
    a: &ScoreSeries,
    b: &ScoreSeries,
) -> Result<(Vec<u64>, Vec<f64>), RankError> {
    let index_b: HashMap<u64, f64> = b
        .timestamps()
        .iter()
        .copied()
        .zip(b.scores().iter().copied())
        .collect();
    let mut timestamps = Vec::new();
    let mut deltas = Vec::new();
    for (&t, &score_a) in a.timestamps().iter().zip(a.scores()) {
        if let Some(&score_b) = index_b.get(&t) {
            timestamps.push(t);
            deltas.push(score_a - score_b);
        }
    }
    if timestamps.len() < 2 {
        return Err(RankError::TooFewCommonPoints {
            got: timestamps.len(),
        });
    }
    Ok((timestamps, deltas))
}

/// The difference model plus everything needed to score a pair. Differences
/// live in [-1, 1]; they are mapped affinely onto [0, 1] so the score-space
/// forecaster applies unchanged, then mapped back.
struct DeltaModel {
    model: ForecastModel,
    timestamps: Vec<u64>,
    deltas: Vec<f64>,
    train_len: usize,
}

fn encode(delta: f64) -> f64 {
    ((delta + 1.0) / 2.0).clamp(0.0, 1.0)
}

fn decode(encoded: f64) -> f64 {
    2.0 * encoded - 1.0
}

fn fit_delta_model(
    a: &ScoreSeries,
    b: &ScoreSeries,
    config: &DeltaConfig,
) -> Result<DeltaModel, RankError> {
    config.validate()?;
    let (timestamps, deltas) = difference_series(a, b)?;
    let n = timestamps.len();
    let train_len = ((n as f64 * config.train_fraction).floor() as usize).clamp(1, n - 1);
    let train_mean = stats::mean(
        &deltas[..train_len]
            .iter()
            .map(|&d| encode(d))
            .collect::<Vec<f64>>(),
    );
    // The difference model only drives point forecasts; the innovation scale
    // is irrelevant to conformal calibration.
    let model = ForecastModel::new(config.reversion_rate, train_mean, 0.0)?;
    Ok(DeltaModel {
        model,
        timestamps,
        deltas,
        train_len,
    })
}

impl DeltaModel {
    /// Rolling one-step residuals `|delta_i - forecast_i|` over the
    /// calibration segment, computed in difference space.
    fn calibration(&self) -> Result<CalibrationSet, RankError> {
        let mut residuals = Vec::with_capacity(self.deltas.len() - self.train_len);
        for i in self.train_len..self.deltas.len() {
            let hours = (self.timestamps[i] - self.timestamps[i - 1]) as f64;
            let forecast01 =
                mean_reversion_forecast(encode(self.deltas[i - 1]), &self.model, hours)?;
            residuals.push((self.deltas[i] - decode(forecast01)).abs());
        }
        Ok(CalibrationSet::new(residuals)?)
    }

    /// Point estimate of the difference at the configured horizon.
    fn estimate(&self, horizon_hours: f64) -> Result<f64, RankError> {
        let last = encode(*self.deltas.last().expect("nonempty by construction"));
        Ok(decode(mean_reversion_forecast(
            last,
            &self.model,
            horizon_hours,
        )?))
    }
}

/// Nonconformity residuals of the difference series around its forecasts.
pub fn delta_calibration(
    a: &ScoreSeries,
    b: &ScoreSeries,
    config: &DeltaConfig,
) -> Result<CalibrationSet, RankError> {
    fit_delta_model(a, b, config)?.calibration()
}

/// Point estimate of the score difference `a - b` at the configured horizon.
pub fn delta_estimate(
    a: &ScoreSeries,
    b: &ScoreSeries,
    config: &DeltaConfig,
) -> Result<f64, RankError> {
    let model = fit_delta_model(a, b, config)?;
    model.estimate(config.horizon_hours)
}

/// Rank a pair, or abstain when the conformal difference interval contains
/// zero (inclusive at the endpoints: a boundary zero abstains).
pub fn abstain_decision(
    pair: PairKey,
    delta_estimate: f64,
    cal: &CalibrationSet,
    alpha: f64,
) -> Result<RankDecision, RankError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RankError::InvalidAlpha { value: alpha });
    }
    let interval = conformal_interval_within(delta_estimate, cal, alpha, (-1.0, 1.0))?;
    let decision = if interval.contains(0.0) {
        RankOutcome::Abstain
    } else if delta_estimate > 0.0 {
        RankOutcome::RankedAAbove
    } else {
        RankOutcome::RankedBAbove
    };
    Ok(RankDecision {
        pair,
        delta_estimate,
        interval,
        p_value: conformal_p_value(delta_estimate, cal),
        decision,
        fdr_adjusted: false,
    })
}

/// Rank-based conformal p-value for the zero-difference null:
/// `(1 + #{residuals >= |delta|}) / (n_cal + 1)`.
pub fn conformal_p_value(delta_estimate: f64, cal: &CalibrationSet) -> f64 {
    let at_least = cal.count_at_least(delta_estimate.abs());
    (1 + at_least) as f64 / (cal.n_cal() + 1) as f64
}

/// Benjamini-Hochberg rejection mask at target FDR `q`: find the largest `k`
/// with `p_(k) <= k * q / m` and reject every hypothesis with a p-value at or
/// below that threshold (so ties are rejected together).
pub fn benjamini_hochberg(p_values: &[f64], q: f64) -> Result<Vec<bool>, RankError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(RankError::InvalidQ { value: q });
    }
    if let Some(&bad) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(RankError::InvalidPValue { value: bad });
    }
    let m = p_values.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut sorted = p_values.to_vec();
    stats::sort_ascending(&mut sorted);
    let mut cutoff = None;
    for (rank, &p) in sorted.iter().enumerate().rev() {
        if p <= (rank + 1) as f64 * q / m as f64 {
            cutoff = Some(p);
            break;
        }
    }
    Ok(match cutoff {
        Some(threshold) => p_values.iter().map(|&p| p <= threshold).collect(),
        None => vec![false; m],
    })
}

/// Re-decide pairs after BH correction: a pair is ranked only if its p-value
/// lands in the rejection set; everything else abstains.
pub fn apply_fdr(decisions: &[RankDecision], q: f64) -> Result<Vec<RankDecision>, RankError> {
    let p_values: Vec<f64> = decisions.iter().map(|d| d.p_value).collect();
    let rejected = benjamini_hochberg(&p_values, q)?;
    Ok(decisions
        .iter()
        .zip(rejected)
        .map(|(decision, reject)| {
            let outcome = if reject && decision.delta_estimate != 0.0 {
                if decision.delta_estimate > 0.0 {
                    RankOutcome::RankedAAbove
                } else {
                    RankOutcome::RankedBAbove
                }
            } else {
                RankOutcome::Abstain
            };
            RankDecision {
                decision: outcome,
                fdr_adjusted: true,
                ..decision.clone()
            }
        })
        .collect())
}

/// Decide a single pair end to end.
pub fn decide_pair(
    a: &ScoreSeries,
    b: &ScoreSeries,
    config: &DeltaConfig,
    alpha: f64,
) -> Result<RankDecision, RankError> {
    // Work in canonical orientation so the stored delta matches the pair key.
    let (first, second) = if a.agent_id() <= b.agent_id() {
        (a, b)
    } else {
        (b, a)
    };
    let pair = PairKey::new(first.agent_id(), second.agent_id())?;
    let model = fit_delta_model(first, second, config)?;
    let cal = model.calibration()?;
    let estimate = model.estimate(config.horizon_hours)?;
    abstain_decision(pair, estimate, &cal, alpha)
}

/// Decide every unordered pair; pairs are independent and evaluated in
/// parallel, returned in lexicographic pair order.
pub fn decide_all_pairs(
    series: &[ScoreSeries],
    config: &DeltaConfig,
    alpha: f64,
) -> Result<Vec<RankDecision>, RankError> {
    let mut order: Vec<usize> = (0..series.len()).collect();
    order.sort_by(|&i, &j| series[i].agent_id().cmp(series[j].agent_id()));
    let mut pairs = Vec::new();
    for i in 0..order.len() {
        for j in (i + 1)..order.len() {
            pairs.push((order[i], order[j]));
        }
    }
    indexed_map(pairs.len(), |k| {
        let (i, j) = pairs[k];
        decide_pair(&series[i], &series[j], config, alpha)
    })
    .into_iter()
    .collect()
}

/// Leaderboard construction mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LeaderboardMode {
    PerPairAlpha,
    Fdr,
}

impl LeaderboardMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PerPairAlpha => "per_pair_alpha",
            Self::Fdr => "fdr",
        }
    }
}

/// One agent's point score and interval for leaderboard display.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSummary {
    pub agent_id: String,
    pub score: f64,
    pub interval_lower: f64,
    pub interval_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderboardEntry {
    pub agent_id: String,
    pub score: f64,
    pub rank: usize,
    pub interval_lower: f64,
    pub interval_upper: f64,
}

/// Abstention counts for pairs whose agents both sit in one rank band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandAbstention {
    /// 1-based inclusive rank band.
    pub band_start: usize,
    pub band_end: usize,
    pub pairs: usize,
    pub abstained: usize,
}

impl BandAbstention {
    pub fn rate(&self) -> f64 {
        if self.pairs == 0 {
            0.0
        } else {
            self.abstained as f64 / self.pairs as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbstentionSummary {
    pub total_pairs: usize,
    pub ranked: usize,
    pub abstained: usize,
    pub abstention_rate: f64,
    /// Abstention among pairs with both agents ranked in the top 10.
    pub top10: BandAbstention,
    /// Bands of 10 ranks: 1-10, 11-20, ...
    pub bands: Vec<BandAbstention>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Leaderboard {
    pub mode: LeaderboardMode,
    pub entries: Vec<LeaderboardEntry>,
    pub abstention: AbstentionSummary,
}

/// Assemble the leaderboard: agents sorted by point score (ties by id), each
/// unordered pair annotated from `decisions`. Every pair must be present.
pub fn build_leaderboard(
    agents: &[AgentSummary],
    decisions: &[RankDecision],
    mode: LeaderboardMode,
) -> Result<Leaderboard, RankError> {
    let mut sorted: Vec<&AgentSummary> = agents.iter().collect();
    sorted.sort_by(|x, y| {
        y.score
            .partial_cmp(&x.score)
            .expect("scores are finite")
            .then_with(|| x.agent_id.cmp(&y.agent_id))
    });
    let entries: Vec<LeaderboardEntry> = sorted
        .iter()
        .enumerate()
        .map(|(idx, agent)| LeaderboardEntry {
            agent_id: agent.agent_id.clone(),
            score: agent.score,
            rank: idx + 1,
            interval_lower: agent.interval_lower,
            interval_upper: agent.interval_upper,
        })
        .collect();
    let rank_of: HashMap<&str, usize> = entries
        .iter()
        .map(|e| (e.agent_id.as_str(), e.rank))
        .collect();

    let mut by_pair: HashMap<(&str, &str), &RankDecision> = HashMap::new();
    for decision in decisions {
        by_pair.insert((decision.pair.a(), decision.pair.b()), decision);
    }

    let n = entries.len();
    let band_count = n.div_ceil(10).max(1);
    let mut bands: Vec<BandAbstention> = (0..band_count)
        .map(|b| BandAbstention {
            band_start: 10 * b + 1,
            band_end: (10 * (b + 1)).min(n),
            pairs: 0,
            abstained: 0,
        })
        .collect();
    let mut total_pairs = 0;
    let mut abstained = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let (x, y) = (&entries[i].agent_id, &entries[j].agent_id);
            let key = if x < y {
                (x.as_str(), y.as_str())
            } else {
                (y.as_str(), x.as_str())
            };
            let decision = by_pair
                .get(&key)
                .ok_or_else(|| RankError::MissingPairDecision {
                    a: key.0.to_string(),
                    b: key.1.to_string(),
                })?;
            total_pairs += 1;
            let is_abstain = !decision.decision.is_ranked();
            abstained += usize::from(is_abstain);
            let (ra, rb) = (rank_of[x.as_str()], rank_of[y.as_str()]);
            let band = (ra - 1) / 10;
            if band == (rb - 1) / 10 {
                bands[band].pairs += 1;
                bands[band].abstained += usize::from(is_abstain);
            }
        }
    }
    let top10 = bands
        .first()
        .cloned()
        .expect("at least one band exists");
    Ok(Leaderboard {
        mode,
        entries,
        abstention: AbstentionSummary {
            total_pairs,
            ranked: total_pairs - abstained,
            abstained,
            abstention_rate: if total_pairs == 0 {
                0.0
            } else {
                abstained as f64 / total_pairs as f64
            },
            top10,
            bands,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::derive_seed;
    use crate::simgen::{gen_stream, StreamSpec};
    use crate::types::IntervalMethod;
    use approx::assert_relative_eq;

    fn cal(residuals: &[f64]) -> CalibrationSet {
        CalibrationSet::new(residuals.to_vec()).unwrap()
    }

    fn series(id: &str, scores: &[f64]) -> ScoreSeries {
        ScoreSeries::new(
            id,
            scores.iter().copied().enumerate().map(|(t, s)| (t as u64, s)),
        )
        .unwrap()
    }

    #[test]
    fn pair_key_canonicalizes_and_rejects_self_pairs() {
        let k = PairKey::new("b", "a").unwrap();
        assert_eq!((k.a(), k.b()), ("a", "b"));
        assert!(matches!(
            PairKey::new("a", "a"),
            Err(RankError::SameAgent { .. })
        ));
    }

    #[test]
    fn identical_series_give_zero_residuals() {
        let a = series("a", &[0.5, 0.52, 0.48, 0.5, 0.51, 0.47]);
        let b = series("b", &[0.5, 0.52, 0.48, 0.5, 0.51, 0.47]);
        let set = delta_calibration(&a, &b, &DeltaConfig::default()).unwrap();
        assert!(set.residuals().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn constant_offset_series_give_zero_residuals() {
        let base = [0.5, 0.52, 0.48, 0.5, 0.51, 0.47];
        let a = series("a", &base.map(|v| v + 0.1));
        let b = series("b", &base);
        let set = delta_calibration(&a, &b, &DeltaConfig::default()).unwrap();
        for &r in set.residuals() {
            assert!(r.abs() < 1e-12);
        }
        assert_relative_eq!(
            delta_estimate(&a, &b, &DeltaConfig::default()).unwrap(),
            0.1,
            epsilon = 1e-12
        );
    }

    #[test]
    fn calibration_matches_independent_difference_then_calibrate_oracle() {
        // Oracle: build the difference series by hand, forecast each
        // calibration point from its predecessor with the same reversion
        // rule, and collect sorted absolute residuals.
        let scores_a = [0.50, 0.55, 0.47, 0.52, 0.49, 0.56, 0.51, 0.45, 0.53, 0.50];
        let scores_b = [0.40, 0.42, 0.44, 0.41, 0.45, 0.40, 0.43, 0.46, 0.39, 0.42];
        let a = series("a", &scores_a);
        let b = series("b", &scores_b);
        let config = DeltaConfig {
            train_fraction: 0.7,
            reversion_rate: 0.01,
            horizon_hours: 1.0,
        };
        let got = delta_calibration(&a, &b, &config).unwrap();

        let deltas: Vec<f64> = scores_a.iter().zip(&scores_b).map(|(x, y)| x - y).collect();
        let train_len = 7;
        let mean: f64 = deltas[..train_len].iter().sum::<f64>() / train_len as f64;
        let mut expected: Vec<f64> = (train_len..deltas.len())
            .map(|i| {
                let forecast = deltas[i - 1] + 0.01 * (mean - deltas[i - 1]);
                (deltas[i] - forecast).abs()
            })
            .collect();
        expected.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(got.n_cal(), expected.len());
        for (g, e) in got.residuals().iter().zip(&expected) {
            assert_relative_eq!(g, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_disjoint_time_grids() {
        let a = ScoreSeries::new("a", [(0, 0.5), (2, 0.5), (4, 0.5)]).unwrap();
        let b = ScoreSeries::new("b", [(1, 0.5), (3, 0.5), (5, 0.5)]).unwrap();
        assert_eq!(
            difference_series(&a, &b),
            Err(RankError::TooFewCommonPoints { got: 0 })
        );
    }

    #[test]
    fn abstain_when_estimate_is_zero() {
        let pair = PairKey::new("a", "b").unwrap();
        let d = abstain_decision(pair, 0.0, &cal(&[0.01, 0.02, 0.03]), 0.2).unwrap();
        assert_eq!(d.decision, RankOutcome::Abstain);
        assert_eq!(d.p_value, 1.0);
    }

    #[test]
    fn ranked_when_interval_excludes_zero() {
        // Residuals <= 0.05 and a 0.2 estimate: interval near [0.15, 0.25].
        let residuals: Vec<f64> = (1..=100).map(|i| 0.05 * i as f64 / 100.0).collect();
        let pair = PairKey::new("a", "b").unwrap();
        let d = abstain_decision(pair, 0.2, &cal(&residuals), 0.2).unwrap();
        assert_eq!(d.decision, RankOutcome::RankedAAbove);
        assert!(d.interval.lower > 0.0);
        assert_eq!(d.interval.method, IntervalMethod::SplitConformal);

        let pair = PairKey::new("a", "b").unwrap();
        let d = abstain_decision(pair, -0.2, &cal(&residuals), 0.2).unwrap();
        assert_eq!(d.decision, RankOutcome::RankedBAbove);
    }

    #[test]
    fn unbounded_interval_forces_abstention() {
        let pair = PairKey::new("a", "b").unwrap();
        let d = abstain_decision(pair, 0.9, &cal(&[0.01]), 0.2).unwrap();
        assert!(d.interval.unbounded);
        assert_eq!(d.decision, RankOutcome::Abstain);
    }

    #[test]
    fn p_value_counting_examples() {
        let residuals: Vec<f64> = (1..=9).map(|i| i as f64 / 100.0).collect();
        let set = cal(&residuals);
        // Five residuals are >= 0.05, so p = 6 / 10.
        assert_relative_eq!(conformal_p_value(0.05, &set), 0.6, epsilon = 1e-12);
        assert_relative_eq!(conformal_p_value(-0.05, &set), 0.6, epsilon = 1e-12);
        assert_eq!(conformal_p_value(0.0, &set), 1.0);
        assert_relative_eq!(conformal_p_value(0.5, &set), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn bh_worked_example() {
        let p = [0.01, 0.03, 0.04, 0.50];
        let mask = benjamini_hochberg(&p, 0.2).unwrap();
        assert_eq!(mask, vec![true, true, true, false]);
    }

    #[test]
    fn bh_all_ones_rejects_none() {
        let mask = benjamini_hochberg(&[1.0, 1.0, 1.0], 0.2).unwrap();
        assert!(mask.iter().all(|r| !r));
    }

    #[test]
    fn bh_all_tiny_rejects_all() {
        let m = 5;
        let p = vec![0.2 / (m as f64) / 2.0; m];
        let mask = benjamini_hochberg(&p, 0.2).unwrap();
        assert!(mask.iter().all(|r| *r));
    }

    #[test]
    fn bh_empty_input_empty_mask() {
        assert!(benjamini_hochberg(&[], 0.2).unwrap().is_empty());
    }

    #[test]
    fn bh_rejects_ties_together() {
        let p = [0.04, 0.04, 0.9, 0.9];
        let mask = benjamini_hochberg(&p, 0.2).unwrap();
        assert_eq!(mask, vec![true, true, false, false]);
    }

    #[test]
    fn fdr_mode_never_ranks_what_per_pair_abstained_on() {
        let spec = |id: &str, mean: f64, seed: u64| {
            StreamSpec::new(id, mean, 0.05, 0.01, 260, mean, seed).unwrap()
        };
        let series: Vec<ScoreSeries> = (0..6)
            .map(|i| {
                gen_stream(&spec(
                    &format!("agent-{i:02}"),
                    0.40 + 0.03 * i as f64,
                    derive_seed(404, i as u64),
                ))
            })
            .collect();
        let alpha = 0.2;
        let decisions = decide_all_pairs(&series, &DeltaConfig::default(), alpha).unwrap();
        let fdr = apply_fdr(&decisions, alpha).unwrap();
        for (before, after) in decisions.iter().zip(&fdr) {
            if after.decision.is_ranked() {
                assert!(before.decision.is_ranked());
                assert_eq!(before.decision, after.decision);
                assert!(after.fdr_adjusted);
            }
        }
    }

    #[test]
    fn decision_and_p_value_are_consistent() {
        // p > alpha iff 0 lies inside the (1 - alpha) difference interval.
        let mut rng_state = 123456789u64;
        let mut next = move || {
            rng_state = derive_seed(rng_state, 1);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        for trial in 0..200 {
            let n = 1 + (next() * 40.0) as usize;
            let residuals: Vec<f64> = (0..n).map(|_| next() * 0.3).collect();
            let estimate = (next() - 0.5) * 0.8;
            let alpha = 0.05 + 0.9 * next();
            let set = cal(&residuals);
            let pair = PairKey::new("a", "b").unwrap();
            let d = abstain_decision(pair, estimate, &set, alpha).unwrap();
            let p = conformal_p_value(estimate, &set);
            assert_eq!(
                p > alpha,
                d.interval.contains(0.0),
                "trial {trial}: p={p}, alpha={alpha}, interval=[{}, {}]",
                d.interval.lower,
                d.interval.upper
            );
        }
    }

    fn decision(a: &str, b: &str, outcome: RankOutcome) -> RankDecision {
        RankDecision {
            pair: PairKey::new(a, b).unwrap(),
            delta_estimate: 0.1,
            interval: Interval::symmetric(
                0.1,
                0.05,
                0.8,
                IntervalMethod::SplitConformal,
                (-1.0, 1.0),
            ),
            p_value: 0.05,
            decision: outcome,
            fdr_adjusted: false,
        }
    }

    #[test]
    fn leaderboard_two_agents_ranked() {
        let agents = vec![
            AgentSummary {
                agent_id: "a".into(),
                score: 0.6,
                interval_lower: 0.55,
                interval_upper: 0.65,
            },
            AgentSummary {
                agent_id: "b".into(),
                score: 0.5,
                interval_lower: 0.45,
                interval_upper: 0.55,
            },
        ];
        let decisions = vec![decision("a", "b", RankOutcome::RankedAAbove)];
        let board = build_leaderboard(&agents, &decisions, LeaderboardMode::PerPairAlpha).unwrap();
        assert_eq!(board.entries[0].agent_id, "a");
        assert_eq!(board.entries[0].rank, 1);
        assert_eq!(board.abstention.abstention_rate, 0.0);
    }

    #[test]
    fn leaderboard_all_abstain_rate_is_one() {
        let agents: Vec<AgentSummary> = (0..4)
            .map(|i| AgentSummary {
                agent_id: format!("a{i}"),
                score: 0.5 + 0.01 * i as f64,
                interval_lower: 0.4,
                interval_upper: 0.7,
            })
            .collect();
        let mut decisions = Vec::new();
        for i in 0..4 {
            for j in (i + 1)..4 {
                decisions.push(decision(
                    &format!("a{i}"),
                    &format!("a{j}"),
                    RankOutcome::Abstain,
                ));
            }
        }
        let board = build_leaderboard(&agents, &decisions, LeaderboardMode::Fdr).unwrap();
        assert_eq!(board.abstention.abstention_rate, 1.0);
        assert_eq!(board.abstention.total_pairs, 6);
        assert_eq!(board.abstention.top10.pairs, 6);
    }

    #[test]
    fn leaderboard_rejects_missing_pair() {
        let agents = vec![
            AgentSummary {
                agent_id: "a".into(),
                score: 0.6,
                interval_lower: 0.5,
                interval_upper: 0.7,
            },
            AgentSummary {
                agent_id: "b".into(),
                score: 0.5,
                interval_lower: 0.4,
                interval_upper: 0.6,
            },
        ];
        assert!(matches!(
            build_leaderboard(&agents, &[], LeaderboardMode::PerPairAlpha),
            Err(RankError::MissingPairDecision { .. })
        ));
    }
}
