//! Composite score construction and model-uncertainty analyses.
//!
//! A composite quality score is a convex combination of four factors
//! (benchmark, adoption, sentiment, ecosystem). This module provides the
//! composite itself, cross-source divergence (the volatility stratifier used
//! by group-conditional calibration), and three sensitivity analyses: weight
//! perturbation counts, Dirichlet weight sampling with Kendall-tau stability,
//! and percentile-bootstrap confidence intervals for mean scores.

use std::collections::{BTreeMap, HashMap};
use std::io;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::Dirichlet;
use thiserror::Error;

use crate::exec::{derive_seed, indexed_map};
use crate::stats;
use crate::types::{Interval, IntervalMethod};

pub const FACTOR_COUNT: usize = 4;
pub const FACTOR_NAMES: [&str; FACTOR_COUNT] = ["benchmark", "adoption", "sentiment", "ecosystem"];

/// Neutral prior substituted for a missing factor.
pub const NEUTRAL_FILL: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("factor {name} value {value} is outside [0, 1]")]
    FactorOutOfRange { name: &'static str, value: f64 },
    #[error("weight {name} is negative or not finite: {value}")]
    InvalidWeight { name: &'static str, value: f64 },
    #[error("weights must sum to 1 within 1e-9, got {sum}")]
    WeightSumMismatch { sum: f64 },
    #[error("divergence needs at least 2 platforms, got {got}")]
    TooFewPlatforms { got: usize },
    #[error("platform score {value} for {platform} is outside [0, 1]")]
    PlatformScoreOutOfRange { platform: String, value: f64 },
    #[error("perturbation delta must lie in (0, 1), got {delta}")]
    InvalidDelta { delta: f64 },
    #[error("rank window must be at least 1")]
    InvalidRankWindow,
    #[error("Dirichlet sampling requires strictly positive base weights")]
    NonPositiveBaseWeight,
    #[error("concentration must be positive and finite, got {value}")]
    InvalidConcentration { value: f64 },
    #[error("need at least 1 draw")]
    NoDraws,
    #[error("rank sensitivity is undefined for fewer than 2 agents")]
    DegenerateMatrix,
    #[error("rankings do not cover the same item set")]
    MismatchedRankings,
    #[error("observations must be nonempty")]
    EmptyObservations,
    #[error("observation {value} is outside [0, 1]")]
    ObservationOutOfRange { value: f64 },
    #[error("need at least 100 resamples, got {got}")]
    TooFewResamples { got: usize },
    #[error("coverage level must lie in (0, 1), got {level}")]
    InvalidLevel { level: f64 },
    #[error("csv: {0}")]
    Csv(String),
}

/// One agent's factor values with per-factor missingness.
///
/// Present factors lie in `[0, 1]`; a missing factor is substituted with the
/// neutral 0.5 before any composite computation.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorVector {
    benchmark: Option<f64>,
    adoption: Option<f64>,
    sentiment: Option<f64>,
    ecosystem: Option<f64>,
}

impl FactorVector {
    pub fn new(
        benchmark: Option<f64>,
        adoption: Option<f64>,
        sentiment: Option<f64>,
        ecosystem: Option<f64>,
    ) -> Result<Self, ScoreError> {
        for (name, value) in FACTOR_NAMES
            .iter()
            .zip([benchmark, adoption, sentiment, ecosystem])
        {
            if let Some(v) = value {
                if !(0.0..=1.0).contains(&v) {
                    return Err(ScoreError::FactorOutOfRange { name, value: v });
                }
            }
        }
        Ok(Self {
            benchmark,
            adoption,
            sentiment,
            ecosystem,
        })
    }

    /// All four factors present.
    pub fn complete(
        benchmark: f64,
        adoption: f64,
        sentiment: f64,
        ecosystem: f64,
    ) -> Result<Self, ScoreError> {
        Self::new(
            Some(benchmark),
            Some(adoption),
            Some(sentiment),
            Some(ecosystem),
        )
    }

    /// Factor values with missing entries substituted by [`NEUTRAL_FILL`].
    pub fn resolved(&self) -> [f64; FACTOR_COUNT] {
        [
            self.benchmark.unwrap_or(NEUTRAL_FILL),
            self.adoption.unwrap_or(NEUTRAL_FILL),
            self.sentiment.unwrap_or(NEUTRAL_FILL),
            self.ecosystem.unwrap_or(NEUTRAL_FILL),
        ]
    }

    pub fn missing_mask(&self) -> [bool; FACTOR_COUNT] {
        [
            self.benchmark.is_none(),
            self.adoption.is_none(),
            self.sentiment.is_none(),
            self.ecosystem.is_none(),
        ]
    }
}

/// Nonnegative factor weights summing to 1 (within 1e-9).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    weights: [f64; FACTOR_COUNT],
}

impl Weights {
    pub fn new(
        benchmark: f64,
        adoption: f64,
        sentiment: f64,
        ecosystem: f64,
    ) -> Result<Self, ScoreError> {
        let weights = [benchmark, adoption, sentiment, ecosystem];
        for (name, &w) in FACTOR_NAMES.iter().zip(&weights) {
            if !w.is_finite() || w < 0.0 {
                return Err(ScoreError::InvalidWeight { name, value: w });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ScoreError::WeightSumMismatch { sum });
        }
        Ok(Self { weights })
    }

    pub fn as_array(&self) -> [f64; FACTOR_COUNT] {
        self.weights
    }
}

/// The production weight allocation (0.35, 0.25, 0.20, 0.20).
impl Default for Weights {
    fn default() -> Self {
        Self {
            weights: [0.35, 0.25, 0.20, 0.20],
        }
    }
}

/// Per-platform sentiment scores for one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatformScoreSet {
    agent_id: String,
    scores: BTreeMap<String, f64>,
}

impl PlatformScoreSet {
    pub fn new(
        agent_id: impl Into<String>,
        scores: impl IntoIterator<Item = (String, f64)>,
    ) -> Result<Self, ScoreError> {
        let mut map = BTreeMap::new();
        for (platform, value) in scores {
            if !(0.0..=1.0).contains(&value) {
                return Err(ScoreError::PlatformScoreOutOfRange { platform, value });
            }
            map.insert(platform, value);
        }
        Ok(Self {
            agent_id: agent_id.into(),
            scores: map,
        })
    }

    pub fn agent_id(&self) -> &str {
        &self.agent_id
    }

    pub fn platform_count(&self) -> usize {
        self.scores.len()
    }

    pub fn scores(&self) -> impl Iterator<Item = (&str, f64)> {
        self.scores.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

/// Agents-by-factors score matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    agent_ids: Vec<String>,
    factors: Vec<FactorVector>,
}

impl ScoreMatrix {
    pub fn new(agent_ids: Vec<String>, factors: Vec<FactorVector>) -> Self {
        assert_eq!(agent_ids.len(), factors.len());
        Self { agent_ids, factors }
    }

    pub fn agent_ids(&self) -> &[String] {
        &self.agent_ids
    }

    pub fn factors(&self) -> &[FactorVector] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.agent_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agent_ids.is_empty()
    }
}

/// Weighted composite of the four factors; missing factors enter as 0.5.
/// Result lies in `[0, 1]` because the weights are a convex combination.
pub fn composite_score(factors: &FactorVector, weights: &Weights) -> f64 {
    factors
        .resolved()
        .iter()
        .zip(weights.as_array())
        .map(|(f, w)| f * w)
        .sum()
}

/// Cross-source divergence: population standard deviation of one agent's
/// platform scores. Zero iff all platforms agree.
pub fn cross_source_divergence(scores: &PlatformScoreSet) -> Result<f64, ScoreError> {
    if scores.platform_count() < 2 {
        return Err(ScoreError::TooFewPlatforms {
            got: scores.platform_count(),
        });
    }
    let values: Vec<f64> = scores.scores.values().copied().collect();
    Ok(stats::population_std(&values))
}

/// Agent indices ordered best-first under `weights`; ties broken by
/// ascending agent id.
pub fn rank_agents(matrix: &ScoreMatrix, weights: &Weights) -> Vec<usize> {
    let scores: Vec<f64> = matrix
        .factors
        .iter()
        .map(|f| composite_score(f, weights))
        .collect();
    let mut order: Vec<usize> = (0..matrix.len()).collect();
    order.sort_by(|&i, &j| {
        scores[j]
            .partial_cmp(&scores[i])
            .expect("composite scores are finite")
            .then_with(|| matrix.agent_ids[i].cmp(&matrix.agent_ids[j]))
    });
    order
}

fn rank_positions(order: &[usize]) -> Vec<usize> {
    let mut pos = vec![0usize; order.len()];
    for (rank, &agent) in order.iter().enumerate() {
        pos[agent] = rank;
    }
    pos
}

/// Count, per agent, how many of the 8 single-factor weight perturbations
/// (four factors, +/- `delta`, renormalized) displace that agent's rank by at
/// least `rank_window` positions.
pub fn single_factor_perturbation(
    matrix: &ScoreMatrix,
    weights: &Weights,
    delta: f64,
    rank_window: usize,
) -> Result<Vec<usize>, ScoreError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(ScoreError::InvalidDelta { delta });
    }
    if rank_window == 0 {
        return Err(ScoreError::InvalidRankWindow);
    }
    let base_pos = rank_positions(&rank_agents(matrix, weights));
    let mut counts = vec![0usize; matrix.len()];
    for factor in 0..FACTOR_COUNT {
        for sign in [1.0, -1.0] {
            let mut raw = weights.as_array();
            raw[factor] = (raw[factor] + sign * delta).max(0.0);
            let sum: f64 = raw.iter().sum();
            let perturbed = Weights::new(raw[0] / sum, raw[1] / sum, raw[2] / sum, raw[3] / sum)?;
            let pos = rank_positions(&rank_agents(matrix, &perturbed));
            for agent in 0..matrix.len() {
                if base_pos[agent].abs_diff(pos[agent]) >= rank_window {
                    counts[agent] += 1;
                }
            }
        }
    }
    Ok(counts)
}

/// Kendall tau between two tie-free rankings of the same item set:
/// (concordant - discordant) / total pairs.
pub fn kendall_tau(ranking_a: &[usize], ranking_b: &[usize]) -> Result<f64, ScoreError> {
    if ranking_a.len() != ranking_b.len() || ranking_a.len() < 2 {
        return Err(ScoreError::MismatchedRankings);
    }
    let pos_of = |ranking: &[usize]| -> HashMap<usize, usize> {
        ranking
            .iter()
            .enumerate()
            .map(|(rank, &item)| (item, rank))
            .collect()
    };
    let pos_a = pos_of(ranking_a);
    let pos_b = pos_of(ranking_b);
    if pos_a.len() != ranking_a.len() || pos_b.len() != ranking_b.len() {
        return Err(ScoreError::MismatchedRankings); // duplicate items
    }
    if !ranking_a.iter().all(|item| pos_b.contains_key(item)) {
        return Err(ScoreError::MismatchedRankings);
    }
    let items: Vec<usize> = ranking_a.to_vec();
    let n = items.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let da = pos_a[&items[i]] as i64 - pos_a[&items[j]] as i64;
            let db = pos_b[&items[i]] as i64 - pos_b[&items[j]] as i64;
            if da * db > 0 {
                concordant += 1;
            } else {
                discordant += 1; // tie-free by construction, so db != 0
            }
        }
    }
    let total = (n * (n - 1) / 2) as f64;
    Ok((concordant - discordant) as f64 / total)
}

/// Distribution summary of Kendall tau over Dirichlet weight draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauSummary {
    pub median: f64,
    pub p05: f64,
    pub p95: f64,
}

/// Sample weight vectors from `Dirichlet(concentration * base_weights)`, rank
/// agents under each draw, and summarize Kendall tau against the base-weight
/// ranking. Deterministic for a fixed seed, regardless of thread count.
pub fn dirichlet_weight_sensitivity(
    matrix: &ScoreMatrix,
    base_weights: &Weights,
    concentration: f64,
    draws: usize,
    seed: u64,
) -> Result<TauSummary, ScoreError> {
    if matrix.len() < 2 {
        return Err(ScoreError::DegenerateMatrix);
    }
    if draws == 0 {
        return Err(ScoreError::NoDraws);
    }
    if !(concentration.is_finite() && concentration > 0.0) {
        return Err(ScoreError::InvalidConcentration {
            value: concentration,
        });
    }
    let alpha = base_weights.as_array().map(|w| w * concentration);
    if alpha.iter().any(|&a| a <= 0.0) {
        return Err(ScoreError::NonPositiveBaseWeight);
    }
    let dirichlet =
        Dirichlet::new(alpha).map_err(|_| ScoreError::InvalidConcentration {
            value: concentration,
        })?;
    let base_ranking = rank_agents(matrix, base_weights);

    let taus: Vec<Result<f64, ScoreError>> = indexed_map(draws, |i| {
        let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, i as u64));
        let w: [f64; FACTOR_COUNT] = dirichlet.sample(&mut rng);
        let sampled = Weights::new(w[0], w[1], w[2], w[3])?;
        kendall_tau(&base_ranking, &rank_agents(matrix, &sampled))
    });
    let mut taus = taus.into_iter().collect::<Result<Vec<f64>, _>>()?;
    stats::sort_ascending(&mut taus);
    Ok(TauSummary {
        median: stats::percentile_sorted(&taus, 0.5),
        p05: stats::percentile_sorted(&taus, 0.05),
        p95: stats::percentile_sorted(&taus, 0.95),
    })
}

/// Percentile bootstrap interval for the mean of `observations`.
/// Deterministic under a fixed seed.
pub fn bootstrap_score_ci(
    observations: &[f64],
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<Interval, ScoreError> {
    if observations.is_empty() {
        return Err(ScoreError::EmptyObservations);
    }
    if let Some(&bad) = observations.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(ScoreError::ObservationOutOfRange { value: bad });
    }
    if resamples < 100 {
        return Err(ScoreError::TooFewResamples { got: resamples });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(ScoreError::InvalidLevel { level });
    }
    let n = observations.len();
    let mut means = indexed_map(resamples, |i| {
        let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, i as u64));
        let total: f64 = (0..n).map(|_| observations[rng.random_range(0..n)]).sum();
        total / n as f64
    });
    stats::sort_ascending(&mut means);
    let center = stats::mean(observations);
    let lower = stats::percentile_sorted(&means, (1.0 - level) / 2.0);
    let upper = stats::percentile_sorted(&means, (1.0 + level) / 2.0);
    Ok(Interval {
        center,
        lower: lower.min(center),
        upper: upper.max(center),
        level,
        method: IntervalMethod::Bootstrap,
        unbounded: false,
    })
}

/// Read an agents-by-factors matrix from CSV with header
/// `agent_id,benchmark,adoption,sentiment,ecosystem`. Empty cells mark
/// missing factors.
pub fn read_factor_matrix<R: io::Read>(reader: R) -> Result<ScoreMatrix, ScoreError> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let headers = csv_reader.headers().map_err(csv_msg)?.clone();
    let expected = ["agent_id", "benchmark", "adoption", "sentiment", "ecosystem"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(ScoreError::Csv(format!(
            "expected header {:?}, got {:?}",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut agent_ids = Vec::new();
    let mut factors = Vec::new();
    for (row, record) in csv_reader.records().enumerate() {
        let record = record.map_err(csv_msg)?;
        if record.len() != expected.len() {
            return Err(ScoreError::Csv(format!(
                "row {}: expected {} fields, got {}",
                row + 2,
                expected.len(),
                record.len()
            )));
        }
        let parse = |idx: usize| -> Result<Option<f64>, ScoreError> {
            let cell = record.get(idx).unwrap_or("").trim();
            if cell.is_empty() {
                return Ok(None);
            }
            cell.parse::<f64>().map(Some).map_err(|_| {
                ScoreError::Csv(format!("row {}: invalid number {cell:?}", row + 2))
            })
        };
        agent_ids.push(record.get(0).unwrap_or("").trim().to_string());
        factors.push(FactorVector::new(
            parse(1)?,
            parse(2)?,
            parse(3)?,
            parse(4)?,
        )?);
    }
    Ok(ScoreMatrix::new(agent_ids, factors))
}

/// Read per-platform scores from CSV with header `agent_id,platform_id,score`,
/// grouped per agent (agents returned in ascending id order).
pub fn read_platform_scores<R: io::Read>(reader: R) -> Result<Vec<PlatformScoreSet>, ScoreError> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let headers = csv_reader.headers().map_err(csv_msg)?.clone();
    let expected = ["agent_id", "platform_id", "score"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(ScoreError::Csv(format!(
            "expected header {:?}, got {:?}",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut grouped: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    for (row, record) in csv_reader.records().enumerate() {
        let record = record.map_err(csv_msg)?;
        let agent = record.get(0).unwrap_or("").trim().to_string();
        let platform = record.get(1).unwrap_or("").trim().to_string();
        let score: f64 = record
            .get(2)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| ScoreError::Csv(format!("row {}: invalid score", row + 2)))?;
        grouped.entry(agent).or_default().push((platform, score));
    }
    grouped
        .into_iter()
        .map(|(agent, scores)| PlatformScoreSet::new(agent, scores))
        .collect()
}

fn csv_msg(err: csv::Error) -> ScoreError {
    ScoreError::Csv(err.to_string())
}
