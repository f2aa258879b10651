//! Runs an external agent command inside the child workspace.
//!
//! The command is spawned with the workspace as working directory and a
//! cleared environment (plus a passthrough list). After it exits, every
//! `Experiments/main_training/<run>/results.json` is parsed:
//!
//! ```json
//! {"run_name": "loading_focused_v1", "score": 0.5709, "metric": "roc_auc", "higher_is_better": true}
//! ```
//!
//! Extra fields are allowed and ignored except `notes`. A missing, null or
//! non-finite `score` excludes that experiment.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use crate::engine::AgentSeed;
use crate::metric::MetricDirection;

use super::{Executor, ExperimentRecord, RunContext, RunOutcome};

pub const RESULTS_DIR: &str = "Experiments/main_training";

/// Schema of one `results.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub run_name: String,
    pub score: Option<f64>,
    pub metric: String,
    pub higher_is_better: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalExecutor {
    /// Program and arguments. `{workspace}`, `{manifest}` and `{data}` are
    /// substituted in every element.
    pub command: Vec<String>,
    pub timeout: Duration,
    /// Environment variables copied from the engine's environment.
    pub env_passthrough: Vec<String>,
    pub direction: MetricDirection,
}

impl ExternalExecutor {
    pub fn new(command: Vec<String>, direction: MetricDirection) -> Self {
        ExternalExecutor {
            command,
            timeout: Duration::from_secs(30 * 60),
            env_passthrough: vec!["PATH".into(), "HOME".into()],
            direction,
        }
    }

    fn render(&self, ctx: &RunContext<'_>) -> Vec<String> {
        let data = ctx.data.map(|p| p.display().to_string()).unwrap_or_default();
        self.command
            .iter()
            .map(|part| {
                part.replace("{workspace}", &ctx.workspace.display().to_string())
                    .replace("{manifest}", &ctx.manifest.display().to_string())
                    .replace("{data}", &data)
            })
            .collect()
    }

    /// Run the command for one seed. See the module docs for the contract.
    pub fn external_run(&self, ctx: &RunContext<'_>) -> RunOutcome {
        let argv = self.render(ctx);
        let Some((program, args)) = argv.split_first() else {
            return RunOutcome::failed("empty command template");
        };
        let logs = ctx.workspace.join("logs");
        if let Err(e) = fs::create_dir_all(&logs) {
            return RunOutcome::failed(format!("cannot create {}: {e}", logs.display()));
        }
        let (stdout, stderr) = match (File::create(logs.join("agent.stdout")), File::create(logs.join("agent.stderr"))) {
            (Ok(o), Ok(e)) => (o, e),
            (Err(e), _) | (_, Err(e)) => return RunOutcome::failed(format!("cannot open log files: {e}")),
        };

        let mut cmd = Command::new(program);
        cmd.args(args)
            .current_dir(ctx.workspace)
            .env_clear()
            .stdin(Stdio::null())
            .stdout(stdout)
            .stderr(stderr)
            .env("GA_WORKSPACE", ctx.workspace)
            .env("GA_SEED_MANIFEST", ctx.manifest);
        if let Some(data) = ctx.data {
            cmd.env("GA_DATA_PATH", data);
        }
        for key in &self.env_passthrough {
            if let Some(v) = std::env::var_os(key) {
                cmd.env(key, v);
            }
        }

        let started = Instant::now();
        let mut child = match cmd.spawn() {
            Ok(c) => c,
            Err(e) => return RunOutcome::failed(format!("spawn `{program}` failed: {e}")),
        };
        let status = match child.wait_timeout(self.timeout) {
            Ok(Some(status)) => status,
            Ok(None) => {
                let _ = child.kill();
                let _ = child.wait();
                return RunOutcome::failed("timed out")
                    .with_diagnostic("timeout_secs", self.timeout.as_secs_f64());
            }
            Err(e) => {
                let _ = child.kill();
                return RunOutcome::failed(format!("wait failed: {e}"));
            }
        };
        let wall = started.elapsed().as_secs_f64();

        let (experiments, warnings) = parse_results(ctx.workspace, self.direction);
        let mut outcome = RunOutcome::from_experiments(experiments, self.direction)
            .with_diagnostic("wall_secs", wall)
            .with_diagnostic("exit_code", status.code().map_or(serde_json::Value::Null, Into::into));
        if !warnings.is_empty() {
            outcome = outcome.with_diagnostic("warnings", warnings);
        }
        if !outcome.verified {
            outcome = outcome.with_diagnostic("failure", "no parseable scored experiment");
        }
        outcome
    }
}

impl Executor for ExternalExecutor {
    fn execute(&self, _seed: &AgentSeed, ctx: &RunContext<'_>) -> RunOutcome {
        self.external_run(ctx)
    }
}

/// Parse every results file under the workspace, sorted by run directory.
/// Returns the usable experiments and one warning per skipped file.
pub fn parse_results(workspace: &Path, direction: MetricDirection) -> (Vec<ExperimentRecord>, Vec<String>) {
    let root = workspace.join(RESULTS_DIR);
    let mut warnings = Vec::new();
    let Ok(entries) = fs::read_dir(&root) else {
        return (Vec::new(), warnings);
    };
    let mut files: Vec<PathBuf> =
        entries.filter_map(Result::ok).map(|e| e.path().join("results.json")).filter(|p| p.is_file()).collect();
    files.sort();

    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for file in files {
        let parsed = fs::read_to_string(&file)
            .map_err(|e| e.to_string())
            .and_then(|t| serde_json::from_str::<ResultsFile>(&t).map_err(|e| e.to_string()));
        let rel = file.strip_prefix(workspace).unwrap_or(&file).display().to_string();
        let results = match parsed {
            Ok(r) => r,
            Err(e) => {
                warnings.push(format!("{rel}: {e}"));
                continue;
            }
        };
        let Some(score) = results.score.filter(|s| s.is_finite()) else {
            warnings.push(format!("{rel}: missing or non-finite score"));
            continue;
        };
        if !seen.insert(results.run_name.clone()) {
            warnings.push(format!("{rel}: duplicate run_name `{}`", results.run_name));
            continue;
        }
        if results.higher_is_better != direction.higher_is_better {
            warnings.push(format!("{rel}: higher_is_better disagrees with the run's metric direction"));
        }
        out.push(ExperimentRecord { run_name: results.run_name, score, metric_name: results.metric, notes: results.notes });
    }
    (out, warnings)
}
