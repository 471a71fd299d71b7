//! `pulsecal sensitivity`: Dirichlet weight-sensitivity sweep and the
//! single-factor perturbation report for a factor matrix.

use std::fmt::Write as _;

use pulsecal_core::exec::derive_seed;
use pulsecal_core::scorekit::{
    dirichlet_weight_sensitivity, rank_agents, read_factor_matrix, single_factor_perturbation,
    Weights,
};

use crate::csvio::write_text;
use crate::error::CliError;

use super::{CommandContext, CommandResult};

pub fn run(ctx: &mut CommandContext) -> CommandResult {
    let factors_path = ctx.cfg.get_path("factors_csv")?;
    let concentrations = ctx
        .cfg
        .get_list_f64_or("concentrations", &[2.0, 5.0, 10.0, 20.0, 50.0])?;
    let draws = ctx.cfg.get_usize_or("draws", 1000)?;
    let delta = ctx.cfg.get_f64_or("perturbation_delta", 0.10)?;
    let rank_window = ctx.cfg.get_usize_or("rank_window", 1)?;
    for &k in &concentrations {
        if k <= 0.0 {
            return Err(CliError::Config(format!(
                "concentrations must be positive, got {k}"
            )));
        }
    }
    if draws == 0 {
        return Err(CliError::Config("draws must be at least 1".into()));
    }

    let file = std::fs::File::open(&factors_path)
        .map_err(CliError::io(factors_path.display().to_string()))?;
    let matrix = read_factor_matrix(file).map_err(|e| CliError::Input(e.to_string()))?;
    if matrix.len() < 2 {
        return Err(CliError::Input(format!(
            "{}: sensitivity needs at least 2 agents",
            factors_path.display()
        )));
    }
    let weights = Weights::default();

    let mut sweep_csv = String::from("concentration,draws,tau_median,tau_p05,tau_p95\n");
    for (idx, &k) in concentrations.iter().enumerate() {
        let summary = dirichlet_weight_sensitivity(
            &matrix,
            &weights,
            k,
            draws,
            derive_seed(ctx.seed, idx as u64),
        )
        .map_err(|e| CliError::Input(e.to_string()))?;
        writeln!(
            sweep_csv,
            "{k},{draws},{},{},{}",
            summary.median, summary.p05, summary.p95
        )
        .expect("write to string");
    }

    let u_model = single_factor_perturbation(&matrix, &weights, delta, rank_window)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let order = rank_agents(&matrix, &weights);
    let mut rank_of = vec![0usize; matrix.len()];
    for (rank, &agent) in order.iter().enumerate() {
        rank_of[agent] = rank + 1;
    }
    let mut perturbation_csv = String::from("agent_id,base_rank,u_model\n");
    for (idx, agent) in matrix.agent_ids().iter().enumerate() {
        writeln!(
            perturbation_csv,
            "{agent},{},{}",
            rank_of[idx], u_model[idx]
        )
        .expect("write to string");
    }

    let sweep_path = ctx.out_dir.join("dirichlet_sweep.csv");
    write_text(&sweep_path, &sweep_csv)?;
    let perturbation_path = ctx.out_dir.join("perturbation.csv");
    write_text(&perturbation_path, &perturbation_csv)?;
    Ok(vec![sweep_path, perturbation_path])
}
