//! `pulsecal shift-study`: interval behavior around a release-style regime
//! shift, comparing ACI against split-conformal and parametric intervals.
//!
//! The stream carries a level jump and an elevated-volatility window starting
//! at `event_time`; after `shock_duration` steps the increments return to
//! their original scale. Calibration uses only pre-event history, so the
//! fixed-quantile methods keep their widths while ACI reacts online.

use std::fmt::Write as _;

use pulsecal_core::conformal::{
    aci_interval, conformal_interval, forecast_calibration, split_history, AciState,
};
use pulsecal_core::forecast::{estimate_model, mean_reversion_forecast, parametric_interval};
use pulsecal_core::simgen::{gen_stream, inject_shift, ShiftEvent, StreamSpec};

use crate::csvio::{read_score_series, write_text};
use crate::error::CliError;

use super::{CommandContext, CommandResult};

pub fn run(ctx: &mut CommandContext) -> CommandResult {
    if !ctx.cfg.has("event_time") {
        return Err(CliError::Config(
            "shift-study requires event_time: no event in dataset".into(),
        ));
    }
    let event_time = ctx.cfg.get_u64("event_time")? as usize;
    let jump = ctx.cfg.get_f64_or("event_jump", 0.1)?;
    let multiplier = ctx.cfg.get_f64_or("event_multiplier", 3.0)?;
    let shock_duration = ctx.cfg.get_usize_or("shock_duration", 48)?;
    let alpha = ctx.cfg.get_prob_or("alpha", 0.2)?;
    let gamma = ctx.cfg.get_f64_or("aci_step_size", 0.05)?;
    let train_fraction = ctx.cfg.get_prob_or("train_fraction", 0.7)?;
    let pre_window = ctx.cfg.get_usize_or("pre_window", 100)?;
    if gamma <= 0.0 {
        return Err(CliError::Config("aci_step_size must be positive".into()));
    }

    let series = match ctx.cfg.get_path_opt("series_csv") {
        Some(path) => {
            let mut all = read_score_series(&path)?;
            if all.len() != 1 {
                return Err(CliError::Input(format!(
                    "{}: shift-study expects exactly one agent, got {}",
                    path.display(),
                    all.len()
                )));
            }
            all.remove(0)
        }
        None => {
            let length = ctx.cfg.get_usize_or("stream_length", 8000)?;
            let mean = ctx.cfg.get_f64_or("long_run_mean", 0.5)?;
            let std = ctx.cfg.get_f64_or("innovation_std", 0.01)?;
            let rate = ctx.cfg.get_f64_or("reversion_rate", 0.003)?;
            let initial = ctx.cfg.get_f64_or("initial", mean)?;
            let spec = StreamSpec::new("agent-000", mean, rate, std, length, initial, ctx.seed)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let base = gen_stream(&spec);
            let onset = ShiftEvent::new(event_time, jump, multiplier)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let shocked =
                inject_shift(&base, &onset).map_err(|e| CliError::Config(e.to_string()))?;
            if multiplier != 1.0 && event_time + shock_duration < length {
                let offset = ShiftEvent::new(event_time + shock_duration, 0.0, 1.0 / multiplier)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                inject_shift(&shocked, &offset).map_err(|e| CliError::Config(e.to_string()))?
            } else {
                shocked
            }
        }
    };

    let n = series.len();
    if event_time >= n {
        return Err(CliError::Config(format!(
            "event_time {event_time} is outside the stream (length {n}): no event in dataset"
        )));
    }
    if event_time <= pre_window + 10 {
        return Err(CliError::Config(format!(
            "event_time {event_time} leaves no room for a pre-event window of {pre_window}"
        )));
    }
    let eval_start = event_time - pre_window;
    let history = series.segment(0..eval_start);
    let (train, _cal_segment) = split_history(&history, train_fraction)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let rate = ctx.cfg.get_f64_or("model_reversion_rate", 0.003)?;
    let model = estimate_model(&train, rate).map_err(|e| CliError::Input(e.to_string()))?;
    let cal = forecast_calibration(&history, &model, train.len(), 1)
        .map_err(|e| CliError::Input(e.to_string()))?;

    let level = 1.0 - alpha;
    let mut aci = AciState::new(alpha, gamma).map_err(|e| CliError::Config(e.to_string()))?;
    let mut per_method: [MethodTrack; 3] = [
        MethodTrack::new("aci"),
        MethodTrack::new("split-conformal"),
        MethodTrack::new("parametric"),
    ];
    let mut trajectory = String::from("step,method,working_alpha,lower,upper,width,covered\n");

    let scores = series.scores();
    let times = series.timestamps();
    for i in eval_start..n {
        let hours = (times[i] - times[i - 1]) as f64;
        let forecast = mean_reversion_forecast(scores[i - 1], &model, hours)
            .map_err(|e| CliError::Input(e.to_string()))?;
        let actual = scores[i];

        let adaptive = aci_interval(forecast, &cal, &aci)
            .map_err(|e| CliError::Input(e.to_string()))?;
        let working_alpha = aci.working_alpha();
        aci.update(adaptive.contains(actual));
        let split = conformal_interval(forecast, &cal, alpha)
            .map_err(|e| CliError::Input(e.to_string()))?;
        let parametric = parametric_interval(forecast, &model, hours, level)
            .map_err(|e| CliError::Input(e.to_string()))?;

        for (track, (interval, shown_alpha)) in per_method.iter_mut().zip([
            (adaptive, working_alpha),
            (split, alpha),
            (parametric, alpha),
        ]) {
            let covered = interval.contains(actual);
            track.observe(i, event_time, interval.width(), covered);
            writeln!(
                trajectory,
                "{i},{},{shown_alpha},{},{},{},{covered}",
                track.name,
                interval.lower,
                interval.upper,
                interval.width(),
            )
            .expect("write to string");
        }
    }

    let mut summary = String::from(
        "method,pre_mean_width,post6_mean_width,widening_ratio,post_steps,post_miscoverage,final_working_alpha\n",
    );
    for track in &per_method {
        let final_alpha = if track.name == "aci" {
            aci.working_alpha()
        } else {
            alpha
        };
        writeln!(
            summary,
            "{},{},{},{},{},{},{final_alpha}",
            track.name,
            track.pre_mean_width(),
            track.post6_mean_width(),
            track.widening_ratio(),
            track.post_steps,
            track.post_miscoverage(),
        )
        .expect("write to string");
    }

    let trajectory_path = ctx.out_dir.join("shift_trajectory.csv");
    write_text(&trajectory_path, &trajectory)?;
    let summary_path = ctx.out_dir.join("shift_summary.csv");
    write_text(&summary_path, &summary)?;
    Ok(vec![trajectory_path, summary_path])
}

struct MethodTrack {
    name: &'static str,
    pre_width_sum: f64,
    pre_steps: usize,
    post6_width_sum: f64,
    post6_steps: usize,
    post_steps: usize,
    post_misses: usize,
}

impl MethodTrack {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            pre_width_sum: 0.0,
            pre_steps: 0,
            post6_width_sum: 0.0,
            post6_steps: 0,
            post_steps: 0,
            post_misses: 0,
        }
    }

    fn observe(&mut self, step: usize, event_time: usize, width: f64, covered: bool) {
        if step < event_time {
            self.pre_width_sum += width;
            self.pre_steps += 1;
        } else {
            if step < event_time + 6 {
                self.post6_width_sum += width;
                self.post6_steps += 1;
            }
            self.post_steps += 1;
            self.post_misses += usize::from(!covered);
        }
    }

    fn pre_mean_width(&self) -> f64 {
        if self.pre_steps == 0 {
            0.0
        } else {
            self.pre_width_sum / self.pre_steps as f64
        }
    }

    fn post6_mean_width(&self) -> f64 {
        if self.post6_steps == 0 {
            0.0
        } else {
            self.post6_width_sum / self.post6_steps as f64
        }
    }

    fn widening_ratio(&self) -> f64 {
        let pre = self.pre_mean_width();
        if pre == 0.0 {
            f64::NAN
        } else {
            self.post6_mean_width() / pre
        }
    }

    fn post_miscoverage(&self) -> f64 {
        if self.post_steps == 0 {
            0.0
        } else {
            self.post_misses as f64 / self.post_steps as f64
        }
    }
}
