//! Command-line interface.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error, 3 corrupt
//! persisted state.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::compress::{
    compress_pending, group_costs, group_messages, read_transcript, reconstruct_context, select_statuses,
    write_transcript, BudgetConfig, HeadSummarizer, StatusSidecar, WordPunctCounter,
};
use crate::config::{ConfigError, ExecutorKind, RunConfig, EFFECTIVE_CONFIG_FILE};
use crate::engine::{Engine, EngineError, RunSummary};
use crate::executor::SimModelParams;
use crate::lineage::{
    compute_operator_stats, export_report, parent_conditioned_win_rate, simulate_tournaments, LineageLog,
    LineageReport, OperatorStats, ReportFormat,
};
use crate::workspace::{CheckpointError, RunStore};

#[derive(Debug, Parser)]
#[command(name = "seedevo", version, about = "Evolutionary search over agent seeds with Hedge operator allocation")]
pub struct Cli {
    /// Log verbosity (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Start a fresh run.
    Run(RunFlags),
    /// Continue a run from its last checkpoint.
    Resume(ResumeArgs),
    /// Write operator statistics, best-score progression and lineage edges.
    Report(ReportArgs),
    /// Play simulated tournaments and print the operator table.
    Simulate(SimulateArgs),
    /// Compress a JSONL transcript under a token budget.
    Compress(CompressArgs),
    /// Print the effective configuration.
    Config(RunFlags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output root for all run artifacts.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<u32>,
    #[arg(long)]
    pub patience: Option<u32>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum)]
    pub executor: Option<ExecutorKind>,
    /// Agent command for the external executor, e.g. `--command "python agent.py {workspace}"`.
    #[arg(long)]
    pub command: Option<String>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub mount_data: Option<bool>,
    #[arg(long)]
    pub higher_is_better: Option<bool>,
}

impl RunFlags {
    /// Defaults, file, environment, then these flags.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut c = RunConfig::load(self.config.as_deref())?;
        macro_rules! over {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = &self.$flag { c.$($field).+ = v.clone().into(); })*
            };
        }
        over!(
            output => output_root,
            seed => seed,
            population => population,
            max_iterations => max_iterations,
            patience => patience,
            workers => workers,
            executor => executor.kind,
            mount_data => mount_data,
            higher_is_better => higher_is_better,
        );
        if let Some(data) = &self.data {
            c.data_path = Some(data.clone());
        }
        if let Some(cmd) = &self.command {
            c.executor.command = cmd.split_whitespace().map(String::from).collect();
        }
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct ResumeArgs {
    /// Output root of the interrupted run.
    pub root: PathBuf,
    /// Override the worker count saved with the run.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Output root of a run.
    pub root: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: ReportFormatArg,
    /// Destination directory (default `<root>/report`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ReportFormatArg {
    Csv,
    Json,
}

impl From<ReportFormatArg> for ReportFormat {
    fn from(f: ReportFormatArg) -> Self {
        match f {
            ReportFormatArg::Csv => ReportFormat::Csv,
            ReportFormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulator calibration (TOML); defaults to the built-in calibration.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Minimum number of contested tournaments to play.
    #[arg(long, default_value_t = 1000)]
    pub tournaments: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Engine settings (population, Hedge, stopping) as for `run`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Keep the simulated runs here instead of a temporary directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    /// JSONL transcript; one message per line.
    pub transcript: PathBuf,
    /// Budget settings (TOML); defaults to the reference budget.
    #[arg(long)]
    pub budget: Option<PathBuf>,
    #[arg(long)]
    pub target_tokens: Option<usize>,
    /// Fraction of characters the stand-in summarizer keeps.
    #[arg(long, default_value_t = 0.1)]
    pub summary_ratio: f64,
    /// Where to write the transcript with cached compressed forms (default: in place).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Status sidecar path (default `<transcript>.status.json`).
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Also write the reconstructed context as JSONL.
    #[arg(long)]
    pub render: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Corrupt(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Corrupt(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match &e {
            EngineError::Config(_) | EngineError::Hedge(_) => CliError::Config(e.to_string()),
            EngineError::Checkpoint(CheckpointError::Corrupt { .. } | CheckpointError::Version { .. }) => {
                CliError::Corrupt(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Parse the process arguments, run the command and return the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log_level).init();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run(flags) => cmd_run(&flags),
        Command::Resume(args) => cmd_resume(&args),
        Command::Report(args) => cmd_report(&args.root, args.format.into(), args.out.as_deref()),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Compress(args) => cmd_compress(&args),
        Command::Config(flags) => {
            let c = flags.resolve()?;
            print!("{}", c.to_toml());
            c.validate()?;
            Ok(())
        }
    }
}

fn print_summary(root: &Path, summary: &RunSummary) {
    let best = summary.best.as_ref();
    println!(
        "finished after {} iterations ({:?}); best {} = {}",
        summary.iterations,
        summary.reason,
        best.and_then(|b| b.id()).unwrap_or("-"),
        best.and_then(|b| b.score).map_or("-".to_string(), |s| s.to_string()),
    );
    println!("artifacts in {}", root.display());
}

fn write_default_report(root: &Path) -> Result<(), CliError> {
    cmd_report(root, ReportFormat::Json, None)
}

pub fn cmd_run(flags: &RunFlags) -> Result<(), CliError> {
    let cfg = flags.resolve()?;
    cfg.validate()?;
    let root = cfg.output_root.clone();
    if RunStore::open(&root).events_path().exists() {
        return Err(CliError::Config(format!("{} already holds a run; use `resume`", root.display())));
    }
    cfg.dump(&root)?;
    let mut engine = Engine::new(cfg.engine_config(), cfg.build_executor(), &root)?;
    let summary = engine.run()?;
    write_default_report(&root)?;
    print_summary(&root, &summary);
    Ok(())
}

pub fn cmd_resume(args: &ResumeArgs) -> Result<(), CliError> {
    let saved = args.root.join(EFFECTIVE_CONFIG_FILE);
    if !saved.exists() {
        return Err(runtime(format!("nothing to resume in {}", args.root.display())));
    }
    let mut cfg = RunConfig::from_file(&saved)?;
    cfg.output_root = args.root.clone();
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    let mut engine = Engine::resume(cfg.engine_config(), cfg.build_executor(), &args.root)?;
    if let Some(summary) = engine.summary() {
        println!("run already complete");
        print_summary(&args.root, &summary);
        return Ok(());
    }
    let summary = engine.run()?;
    write_default_report(&args.root)?;
    print_summary(&args.root, &summary);
    Ok(())
}

pub fn cmd_report(root: &Path, format: ReportFormat, out: Option<&Path>) -> Result<(), CliError> {
    let events = RunStore::open(root).events_path();
    if !events.exists() {
        return Err(runtime(format!("no event log at {}", events.display())));
    }
    let log = LineageLog::read(&events).map_err(runtime)?;
    let report = LineageReport::build(&log);
    for d in &report.diagnostics {
        log::warn!("{d}");
    }
    let dir = out.map_or_else(|| root.join("report"), Path::to_path_buf);
    for path in export_report(&report, format, &dir).map_err(runtime)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn format_stats_table(stats: &[OperatorStats]) -> String {
    let mut out = format!("{:<10} {:>7} {:>7} {:>8} {:>13}\n", "operator", "played", "won", "win%", "median gain");
    for s in stats {
        let gain = s.median_relative_gain.map_or("-".to_string(), |g| format!("{g:+.5}"));
        out += &format!(
            "{:<10} {:>7} {:>7} {:>7.1}% {:>13}\n",
            s.operator.name(),
            s.tournaments,
            s.wins,
            100.0 * s.win_rate,
            gain
        );
    }
    if let Some(p) = parent_conditioned_win_rate(stats) {
        out += &format!("parent-conditioned pooled win rate: {:.1}%\n", 100.0 * p);
    }
    out
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(path) = &args.params {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.simulator = toml::from_str::<SimModelParams>(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    cfg.executor.kind = ExecutorKind::Simulated;
    cfg.validate()?;
    let temp;
    let root = match &args.output {
        Some(p) => p.clone(),
        None => {
            temp = tempfile::tempdir().map_err(runtime)?;
            temp.path().to_path_buf()
        }
    };
    let log = simulate_tournaments(&cfg.engine_config(), &cfg.simulator_params(), args.tournaments, &root)?;
    let (stats, _) = compute_operator_stats(&log);
    print!("{}", format_stats_table(&stats));
    println!("{} tournaments over {} runs", log.contested().count(), log.runs.len());
    Ok(())
}

pub fn cmd_compress(args: &CompressArgs) -> Result<(), CliError> {
    let mut budget = match &args.budget {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => BudgetConfig::default(),
    };
    if let Some(t) = args.target_tokens {
        budget.target_tokens = t;
    }
    budget.validate().map_err(CliError::Config)?;
    if !(args.summary_ratio > 0.0 && args.summary_ratio <= 1.0) {
        return Err(CliError::Config("summary_ratio must be in (0, 1]".into()));
    }

    let counter = WordPunctCounter;
    let mut history = read_transcript(&args.transcript, &counter).map_err(|e| CliError::Corrupt(e.to_string()))?;
    let report = compress_pending(&mut history, &HeadSummarizer { ratio: args.summary_ratio }, &budget, &counter);
    let (groups, diagnostics) = group_messages(&history);
    for d in &diagnostics {
        log::warn!("{d}");
    }
    let selection = select_statuses(&group_costs(&history, &groups, &budget, &counter), &budget);

    let out = args.out.clone().unwrap_or_else(|| args.transcript.clone());
    write_transcript(&out, &history).map_err(runtime)?;
    let sidecar = args.sidecar.clone().unwrap_or_else(|| {
        let mut p = args.transcript.clone().into_os_string();
        p.push(".status.json");
        p.into()
    });
    StatusSidecar::new(&history, &groups, &selection, budget.target_tokens).write(&sidecar).map_err(runtime)?;
    if let Some(path) = &args.render {
        let rendered = reconstruct_context(&history, &groups, &selection.statuses, &budget, &counter);
        let mut text = String::new();
        for r in &rendered {
            text += &serde_json::to_string(r).expect("rendered message serializes");
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    }

    let original: usize = history.iter().map(|m| m.token_count).sum();
    println!(
        "{} messages in {} groups: {} -> {} tokens (target {}){}",
        history.len(),
        groups.len(),
        original,
        selection.total_tokens,
        budget.target_tokens,
        if selection.over_budget { ", over budget" } else { "" }
    );
    println!(
        "summarized {} shortened, {} copied, {} failed",
        report.shortened.len(),
        report.copied.len(),
        report.failed.len()
    );
    Ok(())
}
