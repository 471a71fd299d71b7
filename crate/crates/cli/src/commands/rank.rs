//! `pulsecal rank`: leaderboards with pairwise abstention, in per-pair-alpha
//! and FDR-corrected modes, plus abstention summaries and an optional
//! false-ranking report against planted ground truth.

use std::fmt::Write as _;

use pulsecal_core::conformal::{conformal_interval, forecast_calibration};
use pulsecal_core::exec::indexed_map;
use pulsecal_core::forecast::{estimate_model, mean_reversion_forecast};
use pulsecal_core::ranking::{
    apply_fdr, build_leaderboard, decide_all_pairs, AgentSummary, DeltaConfig, Leaderboard,
    LeaderboardMode, RankDecision, RankOutcome,
};
use pulsecal_core::types::ScoreSeries;

use crate::csvio::{read_score_series, read_truth_means, write_text};
use crate::error::CliError;

use super::{CommandContext, CommandResult};

pub fn run(ctx: &mut CommandContext) -> CommandResult {
    let series_path = ctx.cfg.get_path("series_csv")?;
    let alpha = ctx.cfg.get_prob_or("alpha", 0.2)?;
    let q = ctx.cfg.get_prob_or("fdr_q", 0.2)?;
    let train_fraction = ctx.cfg.get_prob_or("train_fraction", 0.7)?;
    let horizon = ctx.cfg.get_usize_or("horizon", 24)?;
    let reversion_rate = ctx.cfg.get_f64_or("reversion_rate", 0.003)?;
    let delta_config = DeltaConfig {
        train_fraction,
        reversion_rate: ctx.cfg.get_f64_or("delta_reversion_rate", 1.0)?,
        horizon_hours: ctx.cfg.get_f64_or("delta_horizon", 1.0)?,
    };
    let truth_path = ctx.cfg.get_path_opt("truth_csv");
    if horizon == 0 {
        return Err(CliError::Config("horizon must be positive".into()));
    }

    let series = read_score_series(&series_path)?;
    if series.len() < 2 {
        return Err(CliError::Input(format!(
            "{}: ranking needs at least 2 agents",
            series_path.display()
        )));
    }

    let summaries: Vec<AgentSummary> = indexed_map(series.len(), |idx| {
        summarize_agent(&series[idx], train_fraction, reversion_rate, horizon, alpha)
    })
    .into_iter()
    .collect::<Result<_, _>>()?;

    let per_pair = decide_all_pairs(&series, &delta_config, alpha)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let fdr = apply_fdr(&per_pair, q).map_err(|e| CliError::Input(e.to_string()))?;

    let board_pp = build_leaderboard(&summaries, &per_pair, LeaderboardMode::PerPairAlpha)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let board_fdr = build_leaderboard(&summaries, &fdr, LeaderboardMode::Fdr)
        .map_err(|e| CliError::Input(e.to_string()))?;

    let mut artifacts = Vec::new();
    for (board, name) in [
        (&board_pp, "leaderboard_per_pair.json"),
        (&board_fdr, "leaderboard_fdr.json"),
    ] {
        let path = ctx.out_dir.join(name);
        let mut body = serde_json::to_string_pretty(&board.entries)
            .map_err(|e| CliError::Input(e.to_string()))?;
        body.push('\n');
        write_text(&path, &body)?;
        artifacts.push(path);
    }

    let mut pairs_csv = String::from("agent_a,agent_b,delta,p_value,decision,mode\n");
    for (decisions, mode) in [(&per_pair, "per_pair_alpha"), (&fdr, "fdr")] {
        for d in decisions.iter() {
            writeln!(
                pairs_csv,
                "{},{},{},{},{},{mode}",
                d.pair.a(),
                d.pair.b(),
                d.delta_estimate,
                d.p_value,
                d.decision.as_str(),
            )
            .expect("write to string");
        }
    }
    let pairs_path = ctx.out_dir.join("pairs.csv");
    write_text(&pairs_path, &pairs_csv)?;
    artifacts.push(pairs_path);

    let mut abstention_csv = String::from("mode,scope,pairs,abstained,rate\n");
    for board in [&board_pp, &board_fdr] {
        write_abstention_rows(&mut abstention_csv, board);
    }
    let abstention_path = ctx.out_dir.join("abstention.csv");
    write_text(&abstention_path, &abstention_csv)?;
    artifacts.push(abstention_path);

    if let Some(path) = truth_path {
        let truth = read_truth_means(&path)?;
        let mut csv = String::from("mode,ranked,false_ranked,false_rate\n");
        for (decisions, mode) in [(&per_pair, "per_pair_alpha"), (&fdr, "fdr")] {
            let (ranked, false_ranked) = false_ranking(decisions, &truth)?;
            let rate = if ranked == 0 {
                0.0
            } else {
                false_ranked as f64 / ranked as f64
            };
            writeln!(csv, "{mode},{ranked},{false_ranked},{rate}").expect("write to string");
        }
        let false_path = ctx.out_dir.join("false_ranking.csv");
        write_text(&false_path, &csv)?;
        artifacts.push(false_path);
    }

    Ok(artifacts)
}

fn summarize_agent(
    series: &ScoreSeries,
    train_fraction: f64,
    reversion_rate: f64,
    horizon: usize,
    alpha: f64,
) -> Result<AgentSummary, CliError> {
    let agent = series.agent_id();
    let n = series.len();
    let train_len = (n as f64 * train_fraction).floor() as usize;
    if train_len < 3 || train_len.max(horizon) >= n {
        return Err(CliError::Input(format!(
            "agent {agent}: series of {n} points cannot support horizon {horizon}"
        )));
    }
    let train = series.segment(0..train_len);
    let model =
        estimate_model(&train, reversion_rate).map_err(|e| CliError::Input(e.to_string()))?;
    let cal = forecast_calibration(series, &model, train_len, horizon)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let point = mean_reversion_forecast(series.last_score(), &model, horizon as f64)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let interval =
        conformal_interval(point, &cal, alpha).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(AgentSummary {
        agent_id: agent.to_string(),
        score: point,
        interval_lower: interval.lower,
        interval_upper: interval.upper,
    })
}

fn write_abstention_rows(csv: &mut String, board: &Leaderboard) {
    let mode = board.mode.as_str();
    let a = &board.abstention;
    writeln!(
        csv,
        "{mode},overall,{},{},{}",
        a.total_pairs, a.abstained, a.abstention_rate
    )
    .expect("write to string");
    writeln!(
        csv,
        "{mode},top10,{},{},{}",
        a.top10.pairs,
        a.top10.abstained,
        a.top10.rate()
    )
    .expect("write to string");
    for band in &a.bands {
        writeln!(
            csv,
            "{mode},ranks_{}-{},{},{},{}",
            band.band_start,
            band.band_end,
            band.pairs,
            band.abstained,
            band.rate()
        )
        .expect("write to string");
    }
}

/// Count ranked pairs whose declared direction contradicts the planted means.
/// Pairs with exactly equal true means count as false when ranked.
fn false_ranking(
    decisions: &[RankDecision],
    truth: &std::collections::BTreeMap<String, f64>,
) -> Result<(usize, usize), CliError> {
    let mut ranked = 0;
    let mut false_ranked = 0;
    for d in decisions {
        if !d.decision.is_ranked() {
            continue;
        }
        let mean = |agent: &str| {
            truth
                .get(agent)
                .copied()
                .ok_or_else(|| CliError::Input(format!("truth file is missing agent {agent}")))
        };
        let mean_a = mean(d.pair.a())?;
        let mean_b = mean(d.pair.b())?;
        ranked += 1;
        let correct = match d.decision {
            RankOutcome::RankedAAbove => mean_a > mean_b,
            RankOutcome::RankedBAbove => mean_b > mean_a,
            RankOutcome::Abstain => unreachable!("filtered above"),
        };
        false_ranked += usize::from(!correct);
    }
    Ok((ranked, false_ranked))
}
