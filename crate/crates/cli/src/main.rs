//! `pulsecal`: experiment harness for distribution-free score calibration.
//!
//! Subcommands: simulate, calibrate, shift-study, rank, pipeline,
//! sensitivity. Each takes `--config <path>` plus optional `--seed` and
//! `--out` overrides, writes its artifacts into the run directory, and
//! finishes with a manifest recording the resolved configuration and
//! artifact checksums.
//!
//! Exit codes: 0 success, 1 invalid configuration or arguments, 2 I/O or
//! missing-input failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::SystemTime;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod csvio;
mod error;
mod manifest;

use commands::CommandContext;
use config::Cfg;
use error::CliError;

#[derive(Parser)]
#[command(name = "pulsecal", version, about = "Calibrated uncertainty for streaming quality scores")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset (streams, platforms, factors).
    Simulate(RunArgs),
    /// Coverage and width tables per method, horizon, and level.
    Calibrate(RunArgs),
    /// Interval behavior around an injected release shift.
    ShiftStudy(RunArgs),
    /// Pairwise abstention leaderboards with FDR correction.
    Rank(RunArgs),
    /// Compositional bound summary and correlation sweep.
    Pipeline(RunArgs),
    /// Dirichlet weight sensitivity and perturbation report.
    Sensitivity(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key-value config file (`key = value` per line).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config file's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config file's `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes, everything else is
            // an argument error.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let (name, args) = match &cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::Calibrate(a) => ("calibrate", a),
        Command::ShiftStudy(a) => ("shift-study", a),
        Command::Rank(a) => ("rank", a),
        Command::Pipeline(a) => ("pipeline", a),
        Command::Sensitivity(a) => ("sensitivity", a),
    };
    match run(name, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("pulsecal {name}: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(name: &str, args: &RunArgs) -> Result<(), CliError> {
    let started = SystemTime::now();
    let text = std::fs::read_to_string(&args.config)
        .map_err(CliError::io(args.config.display().to_string()))?;
    let mut cfg = Cfg::parse(&text)?;
    if let Some(seed) = args.seed {
        cfg.set("seed", seed.to_string());
    }
    if let Some(out) = &args.out {
        cfg.set("out_dir", out.display().to_string());
    }
    // Seeds are explicit: there is no entropy fallback.
    let seed = cfg.get_u64("seed")?;
    let out_dir = PathBuf::from(cfg.get_str_or("out_dir", &format!("runs/{name}")));
    std::fs::create_dir_all(&out_dir).map_err(CliError::io(out_dir.display().to_string()))?;

    let mut ctx = CommandContext {
        cfg: &mut cfg,
        seed,
        out_dir: &out_dir,
    };
    let artifacts = match name {
        "simulate" => commands::simulate::run(&mut ctx),
        "calibrate" => commands::calibrate::run(&mut ctx),
        "shift-study" => commands::shift_study::run(&mut ctx),
        "rank" => commands::rank::run(&mut ctx),
        "pipeline" => commands::pipeline::run(&mut ctx),
        "sensitivity" => commands::sensitivity::run(&mut ctx),
        _ => unreachable!("clap restricts the command set"),
    }?;
    let snapshot = cfg.finish()?;
    manifest::write_manifest(&out_dir, name, seed, snapshot, &artifacts, started)?;
    Ok(())
}
