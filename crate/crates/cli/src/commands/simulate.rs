//! `pulsecal simulate`: generate a seeded synthetic dataset.
//!
//! Writes `series.csv`, `platforms.csv`, `classes.csv`, `truth.csv` (the
//! planted long-run means), and `factors.csv` (a factor matrix scattered
//! around each agent's quality level for the sensitivity command).

use std::fmt::Write as _;

use pulsecal_core::exec::derive_seed;
use pulsecal_core::simgen::{gen_factor_matrix, gen_population, PopulationSpec};

use crate::csvio::write_text;
use crate::error::CliError;

use super::{CommandContext, CommandResult};

pub fn run(ctx: &mut CommandContext) -> CommandResult {
    let defaults = PopulationSpec::defaults(ctx.seed);
    let cfg = &mut *ctx.cfg;
    let stream_length = cfg.get_usize_or("stream_length", defaults.stream_length)?;
    if stream_length == 0 {
        return Err(CliError::Config("stream_length must be at least 1".into()));
    }
    let spec = PopulationSpec {
        stable_count: cfg.get_usize_or("stable_agents", defaults.stable_count)?,
        volatile_count: cfg.get_usize_or("volatile_agents", defaults.volatile_count)?,
        stable_innovation_std: cfg
            .get_f64_or("stable_innovation_std", defaults.stable_innovation_std)?,
        volatile_innovation_std: cfg
            .get_f64_or("volatile_innovation_std", defaults.volatile_innovation_std)?,
        stable_divergence_scale: cfg
            .get_f64_or("stable_divergence_scale", defaults.stable_divergence_scale)?,
        volatile_divergence_scale: cfg.get_f64_or(
            "volatile_divergence_scale",
            defaults.volatile_divergence_scale,
        )?,
        platforms_per_agent: cfg
            .get_usize_or("platforms_per_agent", defaults.platforms_per_agent)?,
        stream_length,
        reversion_rate: cfg.get_f64_or("reversion_rate", defaults.reversion_rate)?,
        mean_range: (
            cfg.get_f64_or("mean_low", defaults.mean_range.0)?,
            cfg.get_f64_or("mean_high", defaults.mean_range.1)?,
        ),
        divergence_threshold: cfg
            .get_f64_or("divergence_threshold", defaults.divergence_threshold)?,
        seed: ctx.seed,
    };
    let factor_noise = cfg.get_f64_or("factor_noise", 0.05)?;

    let population = gen_population(&spec).map_err(|e| CliError::Config(e.to_string()))?;

    let mut series_csv = String::from("agent_id,timestamp,score\n");
    for series in &population.series {
        for (&t, &s) in series.timestamps().iter().zip(series.scores()) {
            writeln!(series_csv, "{},{t},{s}", series.agent_id()).expect("write to string");
        }
    }

    let mut platforms_csv = String::from("agent_id,platform_id,score\n");
    for set in &population.platform_scores {
        for (platform, score) in set.scores() {
            writeln!(platforms_csv, "{},{platform},{score}", set.agent_id())
                .expect("write to string");
        }
    }

    let mut classes_csv = String::from("agent_id,class\n");
    let mut truth_csv = String::from("agent_id,long_run_mean\n");
    for ((series, class), mean) in population
        .series
        .iter()
        .zip(&population.classes)
        .zip(&population.long_run_means)
    {
        writeln!(classes_csv, "{},{}", series.agent_id(), class.as_str())
            .expect("write to string");
        writeln!(truth_csv, "{},{mean}", series.agent_id()).expect("write to string");
    }

    let agent_ids: Vec<String> = population
        .series
        .iter()
        .map(|s| s.agent_id().to_string())
        .collect();
    let matrix = gen_factor_matrix(
        &agent_ids,
        &population.long_run_means,
        factor_noise,
        derive_seed(ctx.seed, u64::MAX),
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let mut factors_csv = String::from("agent_id,benchmark,adoption,sentiment,ecosystem\n");
    for (agent, factors) in matrix.agent_ids().iter().zip(matrix.factors()) {
        let [b, a, s, e] = factors.resolved();
        writeln!(factors_csv, "{agent},{b},{a},{s},{e}").expect("write to string");
    }

    let artifacts = [
        ("series.csv", series_csv),
        ("platforms.csv", platforms_csv),
        ("classes.csv", classes_csv),
        ("truth.csv", truth_csv),
        ("factors.csv", factors_csv),
    ];
    let mut paths = Vec::new();
    for (name, content) in artifacts {
        let path = ctx.out_dir.join(name);
        write_text(&path, &content)?;
        paths.push(path);
    }
    Ok(paths)
}
