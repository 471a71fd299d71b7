//! `pulsecal calibrate`: coverage and width tables for every interval method
//! over a horizon and level grid.
//!
//! Each agent's history (everything before the evaluation tail) is split
//! chronologically into train and calibration segments; the evaluation tail
//! is scored with rolling-origin forecasts. Methods: parametric,
//! split-conformal, ACI, Mondrian (divergence-stratified), and the bootstrap
//! baseline. Output rows are grouped by horizon, agent, or stratum.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use pulsecal_core::conformal::{
    aci_interval, bootstrap_residual_band, conformal_interval, forecast_calibration,
    mondrian_calibrate, mondrian_interval, AciState, AgentResiduals, CalibrationSet, StratumMap,
};
use pulsecal_core::exec::{derive_seed, indexed_map};
use pulsecal_core::forecast::{
    estimate_model, mean_reversion_forecast, parametric_interval, ForecastModel,
};
use pulsecal_core::scorekit::{cross_source_divergence, read_platform_scores};
use pulsecal_core::types::{Interval, IntervalMethod, ScoreSeries};

use crate::csvio::{read_score_series, write_text};
use crate::error::CliError;

use super::{CommandContext, CommandResult};

const METHODS: [IntervalMethod; 5] = [
    IntervalMethod::Parametric,
    IntervalMethod::SplitConformal,
    IntervalMethod::Aci,
    IntervalMethod::Mondrian,
    IntervalMethod::Bootstrap,
];

#[derive(Clone, Copy, PartialEq, Eq)]
enum GroupBy {
    Horizon,
    Agent,
    Stratum,
}

struct Params {
    train_fraction: f64,
    eval_fraction: f64,
    horizons: Vec<usize>,
    levels: Vec<f64>,
    reversion_rate: f64,
    gamma: f64,
    threshold: f64,
    resamples: usize,
    group_by: GroupBy,
}

struct AgentPrep {
    model: ForecastModel,
    sigma_cross: f64,
    history_len: usize,
    cals: Vec<CalibrationSet>,
}

/// (n, covered, width_sum) keyed by (method, level, horizon, group).
type Accumulator = BTreeMap<(usize, usize, usize, String), (usize, usize, f64)>;

pub fn run(ctx: &mut CommandContext) -> CommandResult {
    let series_path = ctx.cfg.get_path("series_csv")?;
    let platforms_path = ctx.cfg.get_path("platforms_csv")?;
    let params = Params {
        train_fraction: ctx.cfg.get_prob_or("train_fraction", 0.7)?,
        eval_fraction: ctx.cfg.get_prob_or("eval_fraction", 0.2)?,
        horizons: ctx
            .cfg
            .get_list_usize_or("horizons", &[1, 6, 24, 48, 72])?,
        levels: ctx.cfg.get_list_f64_or("levels", &[0.7, 0.8, 0.9])?,
        reversion_rate: ctx.cfg.get_f64_or("reversion_rate", 0.003)?,
        gamma: ctx.cfg.get_f64_or("aci_step_size", 0.01)?,
        threshold: ctx.cfg.get_f64_or("mondrian_threshold", 0.04)?,
        resamples: ctx.cfg.get_usize_or("bootstrap_resamples", 1000)?,
        group_by: match ctx.cfg.get_str_or("group_by", "horizon").as_str() {
            "horizon" => GroupBy::Horizon,
            "agent" => GroupBy::Agent,
            "stratum" => GroupBy::Stratum,
            other => {
                return Err(CliError::Config(format!(
                    "group_by must be horizon, agent, or stratum, got {other:?}"
                )))
            }
        },
    };
    for &h in &params.horizons {
        if h == 0 {
            return Err(CliError::Config("horizons must be positive".into()));
        }
    }
    for &level in &params.levels {
        if !(level > 0.0 && level < 1.0) {
            return Err(CliError::Config(format!(
                "levels must lie in (0, 1), got {level}"
            )));
        }
    }
    if params.gamma <= 0.0 {
        return Err(CliError::Config("aci_step_size must be positive".into()));
    }

    let series = read_score_series(&series_path)?;
    if series.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no agents found",
            series_path.display()
        )));
    }
    let sigma_by_agent = load_divergence(&platforms_path)?;

    // Pass 1: per-agent models, per-horizon calibration sets, divergence.
    let preps: Vec<Result<AgentPrep, CliError>> = indexed_map(series.len(), |idx| {
        prepare_agent(&series[idx], &sigma_by_agent, &params)
    });
    let preps: Vec<AgentPrep> = preps.into_iter().collect::<Result<_, _>>()?;

    // Per-horizon Mondrian maps pool calibration residuals across agents.
    let stratum_maps: Vec<StratumMap> = params
        .horizons
        .iter()
        .enumerate()
        .map(|(hi, _)| {
            let agents: Vec<AgentResiduals> = series
                .iter()
                .zip(&preps)
                .map(|(s, prep)| AgentResiduals {
                    agent_id: s.agent_id().to_string(),
                    sigma_cross: prep.sigma_cross,
                    residuals: prep.cals[hi].residuals().to_vec(),
                })
                .collect();
            mondrian_calibrate(&agents, params.threshold)
                .map_err(|e| CliError::Input(e.to_string()))
        })
        .collect::<Result<_, _>>()?;

    // Pass 2: evaluate the tail of every series.
    let seed = ctx.seed;
    let partials: Vec<Result<Accumulator, CliError>> = indexed_map(series.len(), |idx| {
        evaluate_agent(
            &series[idx],
            &preps[idx],
            &stratum_maps,
            &params,
            derive_seed(seed, idx as u64),
        )
    });
    let mut acc: Accumulator = BTreeMap::new();
    for partial in partials {
        for (key, (n, covered, width)) in partial? {
            let entry = acc.entry(key).or_insert((0, 0, 0.0));
            entry.0 += n;
            entry.1 += covered;
            entry.2 += width;
        }
    }

    let mut csv = String::from("group,n,coverage,mean_width,method,alpha\n");
    for ((mi, li, _hi, group), (n, covered, width_sum)) in &acc {
        let alpha = round12(1.0 - params.levels[*li]);
        writeln!(
            csv,
            "{group},{n},{},{},{},{alpha}",
            *covered as f64 / *n as f64,
            width_sum / *n as f64,
            METHODS[*mi].as_str(),
        )
        .expect("write to string");
    }
    let path = ctx.out_dir.join("coverage.csv");
    write_text(&path, &csv)?;
    Ok(vec![path])
}

fn load_divergence(path: &Path) -> Result<BTreeMap<String, f64>, CliError> {
    let file = std::fs::File::open(path).map_err(CliError::io(path.display().to_string()))?;
    let sets = read_platform_scores(file).map_err(|e| CliError::Input(e.to_string()))?;
    sets.into_iter()
        .map(|set| {
            let sigma = cross_source_divergence(&set)
                .map_err(|e| CliError::Input(format!("agent {}: {e}", set.agent_id())))?;
            Ok((set.agent_id().to_string(), sigma))
        })
        .collect()
}

fn prepare_agent(
    series: &ScoreSeries,
    sigma_by_agent: &BTreeMap<String, f64>,
    params: &Params,
) -> Result<AgentPrep, CliError> {
    let agent = series.agent_id();
    let sigma_cross = *sigma_by_agent.get(agent).ok_or_else(|| {
        CliError::Input(format!("agent {agent} has no platform scores"))
    })?;
    let n = series.len();
    let eval_len = ((n as f64 * params.eval_fraction).floor() as usize).max(1);
    if eval_len >= n {
        return Err(CliError::Input(format!("agent {agent}: series too short")));
    }
    let history_len = n - eval_len;
    let max_h = *params.horizons.iter().max().expect("nonempty");
    let train_len = (history_len as f64 * params.train_fraction).floor() as usize;
    if train_len < 3 || history_len <= train_len.max(max_h) {
        return Err(CliError::Input(format!(
            "agent {agent}: history of {history_len} points cannot support train fraction \
             {} and horizon {max_h}",
            params.train_fraction
        )));
    }
    let history = series.segment(0..history_len);
    let train = series.segment(0..train_len);
    let model = estimate_model(&train, params.reversion_rate)
        .map_err(|e| CliError::Input(format!("agent {agent}: {e}")))?;
    let cals = params
        .horizons
        .iter()
        .map(|&h| {
            forecast_calibration(&history, &model, train_len, h)
                .map_err(|e| CliError::Input(format!("agent {agent}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AgentPrep {
        model,
        sigma_cross,
        history_len,
        cals,
    })
}

fn evaluate_agent(
    series: &ScoreSeries,
    prep: &AgentPrep,
    stratum_maps: &[StratumMap],
    params: &Params,
    agent_seed: u64,
) -> Result<Accumulator, CliError> {
    let mut acc = Accumulator::new();
    let scores = series.scores();
    let times = series.timestamps();
    let n = series.len();
    let input_err = |e: &dyn std::fmt::Display| CliError::Input(e.to_string());

    for (hi, &h) in params.horizons.iter().enumerate() {
        let cal = &prep.cals[hi];
        let map = &stratum_maps[hi];
        let group = match params.group_by {
            GroupBy::Horizon => format!("h={h}"),
            GroupBy::Agent => format!("{}|h={h}", series.agent_id()),
            GroupBy::Stratum => format!(
                "{}|h={h}",
                map.stratum_for(prep.sigma_cross).as_str()
            ),
        };
        for (li, &level) in params.levels.iter().enumerate() {
            let alpha = 1.0 - level;
            let mut aci = AciState::new(alpha, params.gamma)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let history = series.segment(0..prep.history_len);
            let band = bootstrap_residual_band(
                &history,
                &prep.model,
                h,
                params.resamples,
                level,
                derive_seed(agent_seed, hi as u64),
            )
            .map_err(|e| input_err(&e))?;
            for i in prep.history_len..n {
                let origin = scores[i - h];
                let hours = (times[i] - times[i - h]) as f64;
                let forecast = mean_reversion_forecast(origin, &prep.model, hours)
                    .map_err(|e| input_err(&e))?;
                let actual = scores[i];

                let parametric = parametric_interval(forecast, &prep.model, hours, level)
                    .map_err(|e| input_err(&e))?;
                let split =
                    conformal_interval(forecast, cal, alpha).map_err(|e| input_err(&e))?;
                let adaptive = aci_interval(forecast, cal, &aci).map_err(|e| input_err(&e))?;
                aci.update(adaptive.contains(actual));
                let mondrian = mondrian_interval(forecast, map, prep.sigma_cross, alpha)
                    .map_err(|e| input_err(&e))?;
                let bootstrap = Interval {
                    center: forecast,
                    lower: (forecast + band.0).clamp(0.0, 1.0).min(forecast),
                    upper: (forecast + band.1).clamp(0.0, 1.0).max(forecast),
                    level,
                    method: IntervalMethod::Bootstrap,
                    unbounded: false,
                };

                for (mi, interval) in [parametric, split, adaptive, mondrian, bootstrap]
                    .iter()
                    .enumerate()
                {
                    let entry = acc
                        .entry((mi, li, hi, group.clone()))
                        .or_insert((0, 0, 0.0));
                    entry.0 += 1;
                    entry.1 += usize::from(interval.contains(actual));
                    entry.2 += interval.width();
                }
            }
        }
    }
    Ok(acc)
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}
