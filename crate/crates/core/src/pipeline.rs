//! Compositional uncertainty bounds for multi-stage pipelines and the
//! simulation study validating their tightness across inter-stage
//! correlations.
//!
//! Two closed-form bounds sandwich the composed uncertainty: the
//! independence bound (root-sum-of-squares) and the worst-case bound (plain
//! sum). The simulation composes correlated Gaussian stage errors either
//! additively or multiplicatively and reports the empirical spread; under
//! the additive rule the truth is `sqrt(s1^2 + s2^2 + 2*rho*s1*s2)`.

use thiserror::Error;

use crate::exec::{derive_seed, indexed_map};
use crate::simgen::{gen_correlated_errors, SimError};
use crate::stats;

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("stage sigma must be nonnegative and finite, got {value}")]
    InvalidSigma { value: f64 },
    #[error("bounds need at least 2 stages, got {got}")]
    TooFewStages { got: usize },
    #[error("correlation must lie in [-1, 1], got {value}")]
    InvalidCorrelation { value: f64 },
    #[error("simulation needs at least 2 samples, got {got}")]
    TooFewSamples { got: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// One stage's measurement uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct StageUncertainty {
    pub stage_id: String,
    pub sigma: f64,
}

impl StageUncertainty {
    pub fn new(stage_id: impl Into<String>, sigma: f64) -> Result<Self, PipelineError> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(PipelineError::InvalidSigma { value: sigma });
        }
        Ok(Self {
            stage_id: stage_id.into(),
            sigma,
        })
    }
}

fn check_stages(stages: &[StageUncertainty]) -> Result<(), PipelineError> {
    if stages.len() < 2 {
        return Err(PipelineError::TooFewStages { got: stages.len() });
    }
    Ok(())
}

/// Root-sum-of-squares of the stage sigmas — tight when stage errors are
/// independent.
pub fn independence_bound(stages: &[StageUncertainty]) -> Result<f64, PipelineError> {
    check_stages(stages)?;
    Ok(stages.iter().map(|s| s.sigma * s.sigma).sum::<f64>().sqrt())
}

/// Plain sum of the stage sigmas — holds for any correlation.
pub fn worst_case_bound(stages: &[StageUncertainty]) -> Result<f64, PipelineError> {
    check_stages(stages)?;
    Ok(stages.iter().map(|s| s.sigma).sum())
}

/// How stage errors combine into a pipeline error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompositionRule {
    /// Pipeline error is the sum of stage errors.
    Additive,
    /// Pipeline error is `(1 + e1)(1 + e2) - 1`.
    Multiplicative,
}

impl CompositionRule {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Additive => "additive",
            Self::Multiplicative => "multiplicative",
        }
    }

    fn compose(self, a: f64, b: f64) -> f64 {
        match self {
            Self::Additive => a + b,
            Self::Multiplicative => (1.0 + a) * (1.0 + b) - 1.0,
        }
    }
}

/// Configuration of one two-stage pipeline simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSimConfig {
    sigma_a: f64,
    sigma_b: f64,
    correlation: f64,
    samples: usize,
    rule: CompositionRule,
    seed: u64,
}

impl PipelineSimConfig {
    pub fn new(
        sigma_a: f64,
        sigma_b: f64,
        correlation: f64,
        samples: usize,
        rule: CompositionRule,
        seed: u64,
    ) -> Result<Self, PipelineError> {
        for sigma in [sigma_a, sigma_b] {
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err(PipelineError::InvalidSigma { value: sigma });
            }
        }
        if !(-1.0..=1.0).contains(&correlation) {
            return Err(PipelineError::InvalidCorrelation { value: correlation });
        }
        if samples < 2 {
            return Err(PipelineError::TooFewSamples { got: samples });
        }
        Ok(Self {
            sigma_a,
            sigma_b,
            correlation,
            samples,
            rule,
            seed,
        })
    }

    pub fn correlation(&self) -> f64 {
        self.correlation
    }
}

/// Empirical population std of composed stage errors generated with the
/// configured correlation. Deterministic under the seed.
pub fn simulate_pipeline_sigma(config: &PipelineSimConfig) -> f64 {
    let pairs = gen_correlated_errors(
        config.sigma_a,
        config.sigma_b,
        config.correlation,
        config.samples,
        config.seed,
    )
    .expect("config validated at construction");
    let composed: Vec<f64> = pairs
        .into_iter()
        .map(|(a, b)| config.rule.compose(a, b))
        .collect();
    stats::population_std(&composed)
}

/// One row of a bound-tightness sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rho: f64,
    pub empirical_sigma: f64,
    pub independence_bound: f64,
    pub worst_case_bound: f64,
    pub n: usize,
}

/// Sweep the correlation grid, one simulation per grid point with a derived
/// seed; rows come back in grid order.
pub fn bound_tightness_sweep(
    sigma_a: f64,
    sigma_b: f64,
    rho_grid: &[f64],
    rule: CompositionRule,
    samples: usize,
    seed: u64,
) -> Result<Vec<SweepRow>, PipelineError> {
    let stages = [
        StageUncertainty::new("stage-1", sigma_a)?,
        StageUncertainty::new("stage-2", sigma_b)?,
    ];
    let independence = independence_bound(&stages)?;
    let worst_case = worst_case_bound(&stages)?;
    let configs: Vec<PipelineSimConfig> = rho_grid
        .iter()
        .enumerate()
        .map(|(i, &rho)| {
            PipelineSimConfig::new(sigma_a, sigma_b, rho, samples, rule, derive_seed(seed, i as u64))
        })
        .collect::<Result<_, _>>()?;
    Ok(indexed_map(configs.len(), |i| {
        let config = &configs[i];
        SweepRow {
            rho: config.correlation(),
            empirical_sigma: simulate_pipeline_sigma(config),
            independence_bound: independence,
            worst_case_bound: worst_case,
            n: samples,
        }
    }))
}

/// Closed-form composed sigma under the additive rule.
pub fn additive_closed_form(sigma_a: f64, sigma_b: f64, rho: f64) -> f64 {
    (sigma_a * sigma_a + sigma_b * sigma_b + 2.0 * rho * sigma_a * sigma_b).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn stages(sigmas: &[f64]) -> Vec<StageUncertainty> {
        sigmas
            .iter()
            .enumerate()
            .map(|(i, &s)| StageUncertainty::new(format!("s{i}"), s).unwrap())
            .collect()
    }

    #[test]
    fn independence_bound_reference_values() {
        let b = independence_bound(&stages(&[0.031, 0.065])).unwrap();
        assert_relative_eq!(b, 0.0720138875, epsilon = 1e-9);
        assert_eq!((b * 1000.0).round() / 1000.0, 0.072);
    }

    #[test]
    fn worst_case_bound_reference_values() {
        let b = worst_case_bound(&stages(&[0.031, 0.065])).unwrap();
        assert_relative_eq!(b, 0.096, epsilon = 1e-12);
    }

    #[test]
    fn independence_with_a_zero_stage() {
        let b = independence_bound(&stages(&[0.0, 0.04])).unwrap();
        assert_relative_eq!(b, 0.04, epsilon = 1e-15);
    }

    #[test]
    fn three_stage_generalization() {
        let b = independence_bound(&stages(&[0.03, 0.03, 0.04])).unwrap();
        assert_relative_eq!(b, 0.0034f64.sqrt(), epsilon = 1e-12);
        let w = worst_case_bound(&stages(&[0.01, 0.02, 0.03])).unwrap();
        assert_relative_eq!(w, 0.06, epsilon = 1e-12);
    }

    #[test]
    fn bounds_reject_single_stage() {
        assert_eq!(
            independence_bound(&stages(&[0.05])),
            Err(PipelineError::TooFewStages { got: 1 })
        );
        assert_eq!(
            worst_case_bound(&stages(&[0.05])),
            Err(PipelineError::TooFewStages { got: 1 })
        );
    }

    #[test]
    fn all_zero_sigmas_give_zero_bounds() {
        assert_eq!(worst_case_bound(&stages(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(independence_bound(&stages(&[0.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn simulation_matches_independence_at_zero_rho() {
        let config =
            PipelineSimConfig::new(0.031, 0.065, 0.0, 100_000, CompositionRule::Additive, 4)
                .unwrap();
        let sigma = simulate_pipeline_sigma(&config);
        let expected = additive_closed_form(0.031, 0.065, 0.0);
        assert!((sigma / expected - 1.0).abs() <= 0.03);
    }

    #[test]
    fn simulation_matches_worst_case_at_full_rho() {
        let config =
            PipelineSimConfig::new(0.031, 0.065, 1.0, 100_000, CompositionRule::Additive, 5)
                .unwrap();
        let sigma = simulate_pipeline_sigma(&config);
        assert!((sigma / 0.096 - 1.0).abs() <= 0.03);
    }

    #[test]
    fn simulation_with_one_degenerate_stage() {
        let config =
            PipelineSimConfig::new(0.0, 0.065, 0.3, 50_000, CompositionRule::Additive, 6)
                .unwrap();
        let sigma = simulate_pipeline_sigma(&config);
        assert!((sigma / 0.065 - 1.0).abs() <= 0.03);
    }

    #[test]
    fn sweep_rows_follow_the_grid() {
        let grid = [-0.5, 0.0, 0.5, 0.9];
        let rows =
            bound_tightness_sweep(0.031, 0.065, &grid, CompositionRule::Additive, 20_000, 11)
                .unwrap();
        assert_eq!(rows.len(), 4);
        for (row, &rho) in rows.iter().zip(&grid) {
            assert_eq!(row.rho, rho);
            assert_eq!(row.n, 20_000);
            let expected = additive_closed_form(0.031, 0.065, rho);
            assert!(
                (row.empirical_sigma / expected - 1.0).abs() <= 0.05,
                "rho={rho}: {} vs {expected}",
                row.empirical_sigma
            );
        }
    }

    #[test]
    fn sweep_is_deterministic_under_seed() {
        let grid = [-0.2, 0.4];
        let a = bound_tightness_sweep(0.03, 0.06, &grid, CompositionRule::Multiplicative, 5_000, 7)
            .unwrap();
        let b = bound_tightness_sweep(0.03, 0.06, &grid, CompositionRule::Multiplicative, 5_000, 7)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_rejects_out_of_range_correlation() {
        assert_eq!(
            PipelineSimConfig::new(0.03, 0.06, 1.2, 100, CompositionRule::Additive, 1),
            Err(PipelineError::InvalidCorrelation { value: 1.2 })
        );
    }
}
