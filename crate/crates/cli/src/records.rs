//! Append-only run records, one JSON line per engine run in `runs.jsonl`
//! at the checkpoint root.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub name: String,
    pub engine: String,
    pub run_index: u64,
    /// Incumbent cost at run start; absent for a fresh branch-and-bound run
    /// without an initial solution.
    pub initial_cost: Option<f64>,
    /// Incumbent cost at run end; absent when no feasible solution was seen.
    pub best_cost: Option<f64>,
    pub wall_seconds: f64,
    pub status: String,
    pub config: serde_json::Value,
}

fn records_path(root: &Path) -> PathBuf {
    root.join("runs.jsonl")
}

pub fn read_records(root: &Path) -> Result<Vec<RunRecord>, CliError> {
    let path = records_path(root);
    let text = match std::fs::read_to_string(&path) {
        Ok(text) => text,
        Err(err) if err.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(err) => {
            return Err(CliError::Internal(
                anyhow::Error::new(err).context(format!("reading {}", path.display())),
            ))
        }
    };
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(record) => records.push(record),
            Err(err) => log::warn!(
                "{}:{}: skipping unreadable run record: {err}",
                path.display(),
                lineno + 1
            ),
        }
    }
    Ok(records)
}

/// Next run index for `name`: one past the number of records already stored.
pub fn next_run_index(root: &Path, name: &str) -> Result<u64, CliError> {
    Ok(read_records(root)?
        .iter()
        .filter(|r| r.name == name)
        .count() as u64
        + 1)
}

pub fn append_record(root: &Path, record: &RunRecord) -> Result<(), CliError> {
    std::fs::create_dir_all(root)
        .with_context(|| format!("creating checkpoint root {}", root.display()))?;
    let path = records_path(root);
    let mut file = std::fs::OpenOptions::new()
        .append(true)
        .create(true)
        .open(&path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut line = serde_json::to_vec(record)?;
    line.push(b'\n');
    file.write_all(&line)
        .with_context(|| format!("appending to {}", path.display()))?;
    Ok(())
}
