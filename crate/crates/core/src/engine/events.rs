//! JSONL event log.
//!
//! One JSON object per line with a `type` tag: `run_started`, `tournament`,
//! `hedge` and `iteration`. Records carry archive ids, never filesystem
//! paths, so logs from different output roots compare byte for byte.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::hedge::UpdateReport;
use crate::operator::Operator;

use super::pool::TournamentRecord;
use super::stopping::StopDecision;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStarted {
    pub schema_version: u32,
    pub population: usize,
    pub higher_is_better: bool,
    pub master_seed: u64,
}

/// Allocator state after an iteration; `probabilities` drive the next one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeSnapshot {
    pub iteration: u32,
    pub update: Option<UpdateReport>,
    pub probabilities: BTreeMap<Operator, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub iteration: u32,
    pub elite_ids: Vec<Option<String>>,
    pub elite_scores: Vec<Option<f64>>,
    pub iteration_best: Option<f64>,
    pub best_so_far: Option<f64>,
    pub stagnation_count: u32,
    pub decision: StopDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    RunStarted(RunStarted),
    Tournament(TournamentRecord),
    Hedge(HedgeSnapshot),
    Iteration(IterationSummary),
}

/// Append-only writer.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
}

impl EventLog {
    pub fn create(path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new().create_new(true).append(true).open(path)?;
        Ok(EventLog { path: path.to_path_buf(), file })
    }

    /// Reopen for appending, dropping anything written after `offset`.
    pub fn reopen_at(path: &Path, offset: u64) -> io::Result<Self> {
        let file = OpenOptions::new().write(true).open(path)?;
        file.set_len(offset)?;
        drop(file);
        let file = OpenOptions::new().append(true).open(path)?;
        Ok(EventLog { path: path.to_path_buf(), file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, events: &[Event]) -> io::Result<()> {
        let mut buf = Vec::new();
        for e in events {
            serde_json::to_writer(&mut buf, e).map_err(io::Error::other)?;
            buf.push(b'\n');
        }
        self.file.write_all(&buf)?;
        self.file.flush()
    }

    pub fn offset(&self) -> io::Result<u64> {
        Ok(self.file.metadata()?.len())
    }
}

/// Every line of a log, parsed. Malformed lines come back as `Err(message)`.
pub fn read_events(path: &Path) -> io::Result<Vec<Result<Event, String>>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", n + 1)));
    }
    Ok(out)
}
