use std::path::{Path, PathBuf};

use crate::config::Cfg;
use crate::error::CliError;

pub mod calibrate;
pub mod pipeline;
pub mod rank;
pub mod sensitivity;
pub mod shift_study;
pub mod simulate;

/// Everything a command needs: resolved config, the run seed, and the output
/// directory (already created).
pub struct CommandContext<'a> {
    pub cfg: &'a mut Cfg,
    pub seed: u64,
    pub out_dir: &'a Path,
}

pub type ArtifactList = Vec<PathBuf>;

pub type CommandResult = Result<ArtifactList, CliError>;
