//! Seeded synthetic data generation: mean-reverting score streams, release
//! regime shifts, stable/volatile populations with controlled cross-source
//! divergence, correlated stage errors, and factor matrices.
//!
//! All generators use the ChaCha12 PRNG seeded explicitly; per-agent and
//! per-draw sub-seeds come from [`derive_seed`], so generation is
//! reproducible bit for bit and embarrassingly parallel.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::exec::{derive_seed, indexed_map};
use crate::scorekit::{FactorVector, PlatformScoreSet, ScoreMatrix};
use crate::types::{ScoreSeries, SeriesError};

/// Attempts per agent to land its divergence on the right side of the class
/// threshold before the population spec is rejected.
pub const DIVERGENCE_RETRY_LIMIT: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("{field} must lie in [0, 1], got {value}")]
    ParamOutOfUnitRange { field: &'static str, value: f64 },
    #[error("{field} must be nonnegative and finite, got {value}")]
    NegativeParam { field: &'static str, value: f64 },
    #[error("reversion rate must lie in [0, 1], got {value}")]
    InvalidReversionRate { value: f64 },
    #[error("stream length must be at least 1")]
    ZeroLength,
    #[error("shift event index {index} is outside the stream (length {len})")]
    EventOutOfRange { index: usize, len: usize },
    #[error("volatility multiplier must be positive, got {value}")]
    InvalidMultiplier { value: f64 },
    #[error("level jump must lie in [-1, 1], got {value}")]
    InvalidJump { value: f64 },
    #[error("population needs at least one agent")]
    EmptyPopulation,
    #[error("population needs at least 2 platforms per agent, got {got}")]
    TooFewPlatforms { got: usize },
    #[error("mean range [{lo}, {hi}] is invalid; keep means inside [0, 1]")]
    InvalidMeanRange { lo: f64, hi: f64 },
    #[error(
        "agent {agent_id} could not satisfy its divergence class after {limit} retries; \
         the class scales sit too close to the threshold"
    )]
    RetryLimitExceeded { agent_id: String, limit: usize },
    #[error("correlation must lie in [-1, 1], got {value}")]
    InvalidCorrelation { value: f64 },
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("factor matrix inputs differ in length")]
    MismatchedFactorInputs,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Parameters of one mean-reverting stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub agent_id: String,
    pub long_run_mean: f64,
    pub reversion_rate: f64,
    pub innovation_std: f64,
    pub length: usize,
    pub initial: f64,
    pub seed: u64,
}

impl StreamSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        agent_id: impl Into<String>,
        long_run_mean: f64,
        reversion_rate: f64,
        innovation_std: f64,
        length: usize,
        initial: f64,
        seed: u64,
    ) -> Result<Self, SimError> {
        check_unit("long_run_mean", long_run_mean)?;
        check_unit("initial", initial)?;
        if !(0.0..=1.0).contains(&reversion_rate) {
            return Err(SimError::InvalidReversionRate {
                value: reversion_rate,
            });
        }
        check_nonnegative("innovation_std", innovation_std)?;
        if length == 0 {
            return Err(SimError::ZeroLength);
        }
        Ok(Self {
            agent_id: agent_id.into(),
            long_run_mean,
            reversion_rate,
            innovation_std,
            length,
            initial,
            seed,
        })
    }
}

fn check_unit(field: &'static str, value: f64) -> Result<(), SimError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(SimError::ParamOutOfUnitRange { field, value })
    }
}

fn check_nonnegative(field: &'static str, value: f64) -> Result<(), SimError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(SimError::NegativeParam { field, value })
    }
}

/// Generate a mean-reverting stream:
/// `s[t+1] = s[t] + rate * (mean - s[t]) + eps`, clamped to `[0, 1]`,
/// with Gaussian innovations. Hourly timestamps `0..length`.
pub fn gen_stream(spec: &StreamSpec) -> ScoreSeries {
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let noise = (spec.innovation_std > 0.0)
        .then(|| Normal::new(0.0, spec.innovation_std).expect("validated std"));
    let mut scores = Vec::with_capacity(spec.length);
    let mut current = spec.initial;
    scores.push(current);
    for _ in 1..spec.length {
        let eps = noise.as_ref().map_or(0.0, |n| n.sample(&mut rng));
        current = (current + spec.reversion_rate * (spec.long_run_mean - current) + eps)
            .clamp(0.0, 1.0);
        scores.push(current);
    }
    ScoreSeries::new(
        spec.agent_id.clone(),
        scores.into_iter().enumerate().map(|(t, s)| (t as u64, s)),
    )
    .expect("generated stream is valid by construction")
}

/// A release-style regime shift: a level jump at `time_index` and a
/// multiplier applied to all later increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftEvent {
    pub time_index: usize,
    pub level_jump: f64,
    pub volatility_multiplier: f64,
}

impl ShiftEvent {
    pub fn new(
        time_index: usize,
        level_jump: f64,
        volatility_multiplier: f64,
    ) -> Result<Self, SimError> {
        if !(-1.0..=1.0).contains(&level_jump) {
            return Err(SimError::InvalidJump { value: level_jump });
        }
        if !(volatility_multiplier.is_finite() && volatility_multiplier > 0.0) {
            return Err(SimError::InvalidMultiplier {
                value: volatility_multiplier,
            });
        }
        Ok(Self {
            time_index,
            level_jump,
            volatility_multiplier,
        })
    }
}

/// Apply a shift event: scores at and after the event are shifted by the
/// jump, and later increments are scaled by the volatility multiplier
/// (regenerating the path step by step, clamped to `[0, 1]`). The prefix
/// before the event is bit-identical to the input; a jump of 0 with
/// multiplier 1 returns the input unchanged.
pub fn inject_shift(series: &ScoreSeries, event: &ShiftEvent) -> Result<ScoreSeries, SimError> {
    let n = series.len();
    if event.time_index >= n {
        return Err(SimError::EventOutOfRange {
            index: event.time_index,
            len: n,
        });
    }
    if event.level_jump == 0.0 && event.volatility_multiplier == 1.0 {
        return Ok(series.clone());
    }
    let scores = series.scores();
    let mut out = scores[..event.time_index].to_vec();
    let mut value = (scores[event.time_index] + event.level_jump).clamp(0.0, 1.0);
    out.push(value);
    for t in (event.time_index + 1)..n {
        let increment = scores[t] - scores[t - 1];
        value = (value + event.volatility_multiplier * increment).clamp(0.0, 1.0);
        out.push(value);
    }
    Ok(ScoreSeries::new(
        series.agent_id(),
        series.timestamps().iter().copied().zip(out),
    )?)
}

/// Volatility class of a generated agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentClass {
    Stable,
    Volatile,
}

impl AgentClass {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Stable => "stable",
            Self::Volatile => "volatile",
        }
    }
}

/// Parameters of a stable/volatile agent population.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub stable_count: usize,
    pub volatile_count: usize,
    pub stable_innovation_std: f64,
    pub volatile_innovation_std: f64,
    pub stable_divergence_scale: f64,
    pub volatile_divergence_scale: f64,
    pub platforms_per_agent: usize,
    pub stream_length: usize,
    pub reversion_rate: f64,
    /// Long-run means are spaced evenly across this range; keep it inside
    /// [0.2, 0.8] so boundary clamping does not bias the stationary mean.
    pub mean_range: (f64, f64),
    /// Divergence threshold separating the classes.
    pub divergence_threshold: f64,
    pub seed: u64,
}

impl PopulationSpec {
    /// The 35-stable / 15-volatile default layout.
    pub fn defaults(seed: u64) -> Self {
        Self {
            stable_count: 35,
            volatile_count: 15,
            stable_innovation_std: 0.002,
            volatile_innovation_std: 0.006,
            stable_divergence_scale: 0.015,
            volatile_divergence_scale: 0.08,
            platforms_per_agent: 6,
            stream_length: 2000,
            reversion_rate: 0.003,
            mean_range: (0.25, 0.75),
            divergence_threshold: 0.04,
            seed,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.stable_count + self.volatile_count == 0 {
            return Err(SimError::EmptyPopulation);
        }
        if self.platforms_per_agent < 2 {
            return Err(SimError::TooFewPlatforms {
                got: self.platforms_per_agent,
            });
        }
        if self.stream_length == 0 {
            return Err(SimError::ZeroLength);
        }
        check_nonnegative("stable_innovation_std", self.stable_innovation_std)?;
        check_nonnegative("volatile_innovation_std", self.volatile_innovation_std)?;
        check_nonnegative("stable_divergence_scale", self.stable_divergence_scale)?;
        check_nonnegative("volatile_divergence_scale", self.volatile_divergence_scale)?;
        check_nonnegative("divergence_threshold", self.divergence_threshold)?;
        if !(0.0..=1.0).contains(&self.reversion_rate) {
            return Err(SimError::InvalidReversionRate {
                value: self.reversion_rate,
            });
        }
        let (lo, hi) = self.mean_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(SimError::InvalidMeanRange { lo, hi });
        }
        Ok(())
    }

    pub fn agent_count(&self) -> usize {
        self.stable_count + self.volatile_count
    }
}

/// A generated population: per-agent streams, platform scores, class labels,
/// and the planted long-run means (the ground-truth ordering).
#[derive(Debug, Clone)]
pub struct Population {
    pub series: Vec<ScoreSeries>,
    pub platform_scores: Vec<PlatformScoreSet>,
    pub classes: Vec<AgentClass>,
    pub long_run_means: Vec<f64>,
}

/// Generate a stable/volatile population. Volatile agents get the larger
/// innovation std and divergence scale; each agent's realized divergence is
/// checked against the class threshold and resampled up to
/// [`DIVERGENCE_RETRY_LIMIT`] times before the spec is rejected.
pub fn gen_population(spec: &PopulationSpec) -> Result<Population, SimError> {
    spec.validate()?;
    let total = spec.agent_count();
    let (lo, hi) = spec.mean_range;
    let agents: Vec<Result<(ScoreSeries, PlatformScoreSet, AgentClass, f64), SimError>> =
        indexed_map(total, |i| {
            let class = if i < spec.stable_count {
                AgentClass::Stable
            } else {
                AgentClass::Volatile
            };
            let agent_id = format!("agent-{i:03}");
            let mean = if total == 1 {
                (lo + hi) / 2.0
            } else {
                lo + (hi - lo) * i as f64 / (total - 1) as f64
            };
            let innovation = match class {
                AgentClass::Stable => spec.stable_innovation_std,
                AgentClass::Volatile => spec.volatile_innovation_std,
            };
            let stream_spec = StreamSpec::new(
                agent_id.clone(),
                mean,
                spec.reversion_rate,
                innovation,
                spec.stream_length,
                mean,
                derive_seed(spec.seed, 2 * i as u64),
            )?;
            let series = gen_stream(&stream_spec);
            let platforms = gen_platform_scores(
                &agent_id,
                mean,
                class,
                spec,
                derive_seed(spec.seed, 2 * i as u64 + 1),
            )?;
            Ok((series, platforms, class, mean))
        });

    let mut population = Population {
        series: Vec::with_capacity(total),
        platform_scores: Vec::with_capacity(total),
        classes: Vec::with_capacity(total),
        long_run_means: Vec::with_capacity(total),
    };
    for agent in agents {
        let (series, platforms, class, mean) = agent?;
        population.series.push(series);
        population.platform_scores.push(platforms);
        population.classes.push(class);
        population.long_run_means.push(mean);
    }
    Ok(population)
}

fn gen_platform_scores(
    agent_id: &str,
    base: f64,
    class: AgentClass,
    spec: &PopulationSpec,
    seed: u64,
) -> Result<PlatformScoreSet, SimError> {
    let scale = match class {
        AgentClass::Stable => spec.stable_divergence_scale,
        AgentClass::Volatile => spec.volatile_divergence_scale,
    };
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let noise = (scale > 0.0).then(|| Normal::new(0.0, scale).expect("validated scale"));
    for _ in 0..DIVERGENCE_RETRY_LIMIT {
        let values: Vec<f64> = (0..spec.platforms_per_agent)
            .map(|_| {
                let eps = noise.as_ref().map_or(0.0, |n| n.sample(&mut rng));
                (base + eps).clamp(0.0, 1.0)
            })
            .collect();
        let sigma = crate::stats::population_std(&values);
        let class_ok = match class {
            AgentClass::Stable => sigma < spec.divergence_threshold,
            AgentClass::Volatile => sigma >= spec.divergence_threshold,
        };
        if class_ok {
            return PlatformScoreSet::new(
                agent_id,
                values
                    .into_iter()
                    .enumerate()
                    .map(|(p, v)| (format!("platform-{p:02}"), v)),
            )
            .map_err(|_| SimError::ParamOutOfUnitRange {
                field: "platform_score",
                value: f64::NAN,
            });
        }
    }
    Err(SimError::RetryLimitExceeded {
        agent_id: agent_id.to_string(),
        limit: DIVERGENCE_RETRY_LIMIT,
    })
}

/// Gaussian error pairs with the exact target covariance structure: the
/// second coordinate is `sigma_b * (rho * z1 + sqrt(1 - rho^2) * z2)`.
pub fn gen_correlated_errors(
    sigma_a: f64,
    sigma_b: f64,
    rho: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>, SimError> {
    check_nonnegative("sigma_a", sigma_a)?;
    check_nonnegative("sigma_b", sigma_b)?;
    if !(-1.0..=1.0).contains(&rho) {
        return Err(SimError::InvalidCorrelation { value: rho });
    }
    if n == 0 {
        return Err(SimError::NoSamples);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let cross = (1.0 - rho * rho).max(0.0).sqrt();
    Ok((0..n)
        .map(|_| {
            let z1 = normal.sample(&mut rng);
            let z2 = normal.sample(&mut rng);
            (sigma_a * z1, sigma_b * (rho * z1 + cross * z2))
        })
        .collect())
}

/// Factor matrix for sensitivity studies: per-agent factor values scattered
/// around a quality level with independent Gaussian noise, clamped to [0, 1].
pub fn gen_factor_matrix(
    agent_ids: &[String],
    qualities: &[f64],
    factor_noise: f64,
    seed: u64,
) -> Result<ScoreMatrix, SimError> {
    if agent_ids.len() != qualities.len() {
        return Err(SimError::MismatchedFactorInputs);
    }
    check_nonnegative("factor_noise", factor_noise)?;
    for &q in qualities {
        check_unit("quality", q)?;
    }
    let noise = (factor_noise > 0.0).then(|| Normal::new(0.0, factor_noise).expect("validated"));
    let factors = agent_ids
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, i as u64));
            let mut value = || {
                let eps = noise.as_ref().map_or(0.0, |n| n.sample(&mut rng));
                (qualities[i] + eps).clamp(0.0, 1.0)
            };
            FactorVector::complete(value(), value(), value(), value())
                .expect("clamped factors are in range")
        })
        .collect();
    Ok(ScoreMatrix::new(agent_ids.to_vec(), factors))
}
