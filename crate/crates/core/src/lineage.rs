//! Read-side analysis of an event log: per-operator tournament statistics,
//! best-score progression and the parent-child graph.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{read_events, run_evolution, EngineConfig, EngineError, Event, HedgeSnapshot, IterationSummary, RunStarted, TournamentRecord};
use crate::executor::{SimModelParams, SimulatedExecutor};
use crate::operator::Operator;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Parsed contents of one or more event logs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LineageLog {
    pub runs: Vec<RunStarted>,
    pub tournaments: Vec<TournamentRecord>,
    pub iterations: Vec<IterationSummary>,
    pub hedge: Vec<HedgeSnapshot>,
    /// Lines that failed to parse.
    pub malformed: usize,
}

impl LineageLog {
    pub fn from_events(events: impl IntoIterator<Item = Event>) -> Self {
        let mut log = LineageLog::default();
        for e in events {
            log.push(e);
        }
        log
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        let mut log = LineageLog::default();
        for e in read_events(path)? {
            match e {
                Ok(e) => log.push(e),
                Err(detail) => {
                    log::warn!("{}: skipping malformed record: {detail}", path.display());
                    log.malformed += 1;
                }
            }
        }
        Ok(log)
    }

    fn push(&mut self, e: Event) {
        match e {
            Event::RunStarted(r) => self.runs.push(r),
            Event::Tournament(t) => self.tournaments.push(t),
            Event::Hedge(h) => self.hedge.push(h),
            Event::Iteration(i) => self.iterations.push(i),
        }
    }

    pub fn extend(&mut self, other: LineageLog) {
        self.runs.extend(other.runs);
        self.tournaments.extend(other.tournaments);
        self.iterations.extend(other.iterations);
        self.hedge.extend(other.hedge);
        self.malformed += other.malformed;
    }

    /// Tournaments against an existing elite parent.
    pub fn contested(&self) -> impl Iterator<Item = &TournamentRecord> {
        self.tournaments.iter().filter(|t| t.contested)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorStats {
    pub operator: Operator,
    pub tournaments: u64,
    pub wins: u64,
    pub win_rate: f64,
    /// Median of `delta / |parent_score|` over valid children; empty when none qualify.
    pub median_relative_gain: Option<f64>,
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    Some(if xs.len() % 2 == 1 { xs[mid] } else { (xs[mid - 1] + xs[mid]) / 2.0 })
}

/// Win counts per operator over contested tournaments. Invalid children count
/// as losses. A zero parent score leaves the gain out of the median and adds
/// a diagnostic.
pub fn compute_operator_stats(log: &LineageLog) -> (Vec<OperatorStats>, Vec<String>) {
    let mut acc: BTreeMap<Operator, (u64, u64, Vec<f64>)> = BTreeMap::new();
    let mut diagnostics = Vec::new();
    for t in log.contested() {
        let (n, wins, gains) = acc.entry(t.operator).or_default();
        *n += 1;
        *wins += u64::from(t.child_won);
        match (t.delta, t.parent_score) {
            (Some(_), Some(p)) if p == 0.0 => {
                diagnostics.push(format!("{}: parent score is 0, relative gain skipped", t.child_id))
            }
            (Some(d), Some(p)) => gains.push(d / p.abs()),
            _ => {}
        }
    }
    let stats = acc
        .into_iter()
        .map(|(operator, (tournaments, wins, gains))| OperatorStats {
            operator,
            tournaments,
            wins,
            win_rate: wins as f64 / tournaments as f64,
            median_relative_gain: median(gains),
        })
        .collect();
    (stats, diagnostics)
}

/// Pooled win rate of the operators that build on an elite parent.
pub fn parent_conditioned_win_rate(stats: &[OperatorStats]) -> Option<f64> {
    let (n, w) = stats
        .iter()
        .filter(|s| s.operator.is_parent_conditioned())
        .fold((0, 0), |(n, w), s| (n + s.tournaments, w + s.wins));
    (n > 0).then(|| w as f64 / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressPoint {
    pub run: usize,
    pub iteration: u32,
    pub best_score: Option<f64>,
}

/// Best elite score after each iteration. Iteration numbers restarting at 1
/// start a new run index when several logs were concatenated.
pub fn best_score_progression(log: &LineageLog) -> Vec<ProgressPoint> {
    let mut run = 0;
    let mut last = 0;
    log.iterations
        .iter()
        .map(|s| {
            if s.iteration <= last {
                run += 1;
            }
            last = s.iteration;
            ProgressPoint { run, iteration: s.iteration, best_score: s.iteration_best }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageEdge {
    pub child_id: String,
    pub parent_ids: Vec<String>,
    pub operator: Operator,
    pub iteration: u32,
    pub slot: usize,
    pub won: bool,
    pub valid: bool,
}

pub fn lineage_edges(log: &LineageLog) -> Vec<LineageEdge> {
    log.tournaments
        .iter()
        .map(|t| LineageEdge {
            child_id: t.child_id.clone(),
            parent_ids: t.parent_ids.clone(),
            operator: t.operator,
            iteration: t.iteration,
            slot: t.slot,
            won: t.child_won,
            valid: t.child_valid,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageReport {
    pub schema_version: u32,
    pub operators: Vec<OperatorStats>,
    pub progression: Vec<ProgressPoint>,
    pub edges: Vec<LineageEdge>,
    pub diagnostics: Vec<String>,
}

impl LineageReport {
    pub fn build(log: &LineageLog) -> Self {
        let (operators, mut diagnostics) = compute_operator_stats(log);
        if log.malformed > 0 {
            diagnostics.push(format!("{} malformed records skipped", log.malformed));
        }
        LineageReport {
            schema_version: REPORT_SCHEMA_VERSION,
            operators,
            progression: best_score_progression(log),
            edges: lineage_edges(log),
            diagnostics,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

pub const JSON_REPORT_FILE: &str = "lineage.json";
pub const OPERATORS_CSV: &str = "operator_stats.csv";
pub const PROGRESSION_CSV: &str = "progression.csv";
pub const EDGES_CSV: &str = "edges.csv";

#[derive(Serialize, Deserialize)]
struct EdgeRow {
    child_id: String,
    parent_ids: String,
    operator: Operator,
    iteration: u32,
    slot: usize,
    won: bool,
    valid: bool,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), ReportError> {
    let err = |source| ReportError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for row in rows {
        w.serialize(row).map_err(err)?;
    }
    w.flush().map_err(|source| ReportError::Io { path: path.to_path_buf(), source })
}

fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, ReportError> {
    let err = |source| ReportError::Csv { path: path.to_path_buf(), source };
    csv::Reader::from_path(path).map_err(err)?.deserialize().collect::<Result<_, _>>().map_err(err)
}

/// Write the report into `dir`: one JSON document, or three CSV tables
/// (operator stats, progression, edges; parent ids joined with `;`).
pub fn export_report(report: &LineageReport, format: ReportFormat, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir).map_err(|source| ReportError::Io { path: dir.to_path_buf(), source })?;
    match format {
        ReportFormat::Json => {
            let path = dir.join(JSON_REPORT_FILE);
            let mut json = serde_json::to_string_pretty(report)
                .map_err(|source| ReportError::Json { path: path.clone(), source })?;
            json.push('\n');
            std::fs::write(&path, json).map_err(|source| ReportError::Io { path: path.clone(), source })?;
            Ok(vec![path])
        }
        ReportFormat::Csv => {
            let paths = [OPERATORS_CSV, PROGRESSION_CSV, EDGES_CSV].map(|f| dir.join(f));
            write_csv(&paths[0], &report.operators)?;
            write_csv(&paths[1], &report.progression)?;
            write_csv(
                &paths[2],
                report.edges.iter().map(|e| EdgeRow {
                    child_id: e.child_id.clone(),
                    parent_ids: e.parent_ids.join(";"),
                    operator: e.operator,
                    iteration: e.iteration,
                    slot: e.slot,
                    won: e.won,
                    valid: e.valid,
                }),
            )?;
            Ok(paths.to_vec())
        }
    }
}

/// Read back a report written by [`export_report`]. CSV reports carry no
/// diagnostics and report the current schema version.
pub fn import_report(format: ReportFormat, dir: &Path) -> Result<LineageReport, ReportError> {
    match format {
        ReportFormat::Json => {
            let path = dir.join(JSON_REPORT_FILE);
            let text = std::fs::read_to_string(&path).map_err(|source| ReportError::Io { path: path.clone(), source })?;
            serde_json::from_str(&text).map_err(|source| ReportError::Json { path, source })
        }
        ReportFormat::Csv => {
            let edges: Vec<EdgeRow> = read_csv(&dir.join(EDGES_CSV))?;
            Ok(LineageReport {
                schema_version: REPORT_SCHEMA_VERSION,
                operators: read_csv(&dir.join(OPERATORS_CSV))?,
                progression: read_csv(&dir.join(PROGRESSION_CSV))?,
                edges: edges
                    .into_iter()
                    .map(|r| LineageEdge {
                        child_id: r.child_id,
                        parent_ids: r.parent_ids.split(';').filter(|s| !s.is_empty()).map(String::from).collect(),
                        operator: r.operator,
                        iteration: r.iteration,
                        slot: r.slot,
                        won: r.won,
                        valid: r.valid,
                    })
                    .collect(),
                diagnostics: Vec::new(),
            })
        }
    }
}

/// Run seeded simulated evolutions (seeds `config.master_seed`, `+1`, ...)
/// under `root` until at least `min_tournaments` contested tournaments exist.
pub fn simulate_tournaments(
    config: &EngineConfig,
    params: &SimModelParams,
    min_tournaments: usize,
    root: &Path,
) -> Result<LineageLog, EngineError> {
    params.validate().map_err(EngineError::Config)?;
    let mut log = LineageLog::default();
    let mut replicate = 0u64;
    while log.contested().count() < min_tournaments {
        let cfg = EngineConfig {
            master_seed: config.master_seed.wrapping_add(replicate),
            direction: params.direction,
            ..config.clone()
        };
        let (_, events) = run_evolution(cfg, SimulatedExecutor::new(params.clone()), &root.join(format!("run-{replicate:04}")))?;
        log.extend(LineageLog::from_events(events));
        replicate += 1;
    }
    Ok(log)
}
