//! CSV input/output for the run directory.
//!
//! Schemas:
//! - score series: `agent_id,timestamp,score` (timestamps are hours)
//! - platform scores: `agent_id,platform_id,score`
//! - class labels: `agent_id,class`
//! - ground-truth means: `agent_id,long_run_mean`

use std::collections::BTreeMap;
use std::path::Path;

use pulsecal_core::types::ScoreSeries;

use crate::error::CliError;

/// Read score series grouped per agent, returned in ascending agent-id order.
pub fn read_score_series(path: &Path) -> Result<Vec<ScoreSeries>, CliError> {
    let file = std::fs::File::open(path).map_err(CliError::io(path.display().to_string()))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        .clone();
    let expected = ["agent_id", "timestamp", "score"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(CliError::Input(format!(
            "{}: expected header `agent_id,timestamp,score`",
            path.display()
        )));
    }
    let mut grouped: BTreeMap<String, Vec<(u64, f64)>> = BTreeMap::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let field = |idx: usize| record.get(idx).unwrap_or("").trim().to_string();
        let timestamp: u64 = field(1).parse().map_err(|_| {
            CliError::Input(format!("{}: row {}: bad timestamp", path.display(), row + 2))
        })?;
        let score: f64 = field(2).parse().map_err(|_| {
            CliError::Input(format!("{}: row {}: bad score", path.display(), row + 2))
        })?;
        grouped.entry(field(0)).or_default().push((timestamp, score));
    }
    grouped
        .into_iter()
        .map(|(agent, mut points)| {
            points.sort_by_key(|(t, _)| *t);
            ScoreSeries::new(&agent, points)
                .map_err(|e| CliError::Input(format!("{}: agent {agent}: {e}", path.display())))
        })
        .collect()
}

/// Read per-agent ground-truth long-run means (`agent_id,long_run_mean`).
pub fn read_truth_means(path: &Path) -> Result<BTreeMap<String, f64>, CliError> {
    let file = std::fs::File::open(path).map_err(CliError::io(path.display().to_string()))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["agent_id", "long_run_mean"] {
        return Err(CliError::Input(format!(
            "{}: expected header `agent_id,long_run_mean`",
            path.display()
        )));
    }
    let mut means = BTreeMap::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let agent = record.get(0).unwrap_or("").trim().to_string();
        let mean: f64 = record.get(1).unwrap_or("").trim().parse().map_err(|_| {
            CliError::Input(format!("{}: row {}: bad mean", path.display(), row + 2))
        })?;
        means.insert(agent, mean);
    }
    Ok(means)
}

/// Write a text artifact, creating parent directories as needed.
pub fn write_text(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(CliError::io(parent.display().to_string()))?;
    }
    std::fs::write(path, content).map_err(CliError::io(path.display().to_string()))
}
