//! Run-execution contract.
//!
//! An [`Executor`] turns a materialized seed into a [`RunOutcome`]. It never
//! fails past this boundary: spawn errors, timeouts and missing results all
//! come back as unverified outcomes carrying diagnostics.

mod external;
mod simulated;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::AgentSeed;
use crate::metric::MetricDirection;

pub use external::{parse_results, ExternalExecutor, ResultsFile, RESULTS_DIR};
pub use simulated::{simulate_run, GainModel, InitialModel, SimModelParams, SimulatedExecutor};

/// One scored experiment inside a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub run_name: String,
    pub score: f64,
    pub metric_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub score: Option<f64>,
    pub experiments: Vec<ExperimentRecord>,
    pub verified: bool,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, serde_json::Value>,
}

impl RunOutcome {
    /// Verified iff at least one finite-scored experiment exists; the score is
    /// the best experiment under `direction`.
    pub fn from_experiments(experiments: Vec<ExperimentRecord>, direction: MetricDirection) -> Self {
        let experiments: Vec<_> = experiments.into_iter().filter(|e| e.score.is_finite()).collect();
        let score = direction.best(experiments.iter().map(|e| e.score));
        RunOutcome { verified: score.is_some(), score, experiments, diagnostics: BTreeMap::new() }
    }

    pub fn failed(reason: impl Into<String>) -> Self {
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("failure".to_string(), serde_json::Value::String(reason.into()));
        RunOutcome { score: None, experiments: Vec::new(), verified: false, diagnostics }
    }

    pub fn with_diagnostic(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.diagnostics.insert(key.to_string(), value.into());
        self
    }

    /// A child counts only if it is verified with a finite score and at least
    /// one experiment.
    pub fn is_valid(&self) -> bool {
        self.verified && !self.experiments.is_empty() && self.score.is_some_and(f64::is_finite)
    }

    /// Downgrade an outcome that claims verification without meeting the rule.
    pub fn enforce_verification(mut self) -> Self {
        if self.verified && !self.is_valid() {
            self.verified = false;
            self.diagnostics
                .insert("verification".into(), "claimed verified without a finite scored experiment".into());
        }
        self
    }
}

/// Paths and randomness handed to an executor for one run.
#[derive(Debug, Clone, Copy)]
pub struct RunContext<'a> {
    pub workspace: &'a Path,
    pub manifest: &'a Path,
    pub data: Option<&'a Path>,
    /// Seed for any randomness the executor needs; derived per slot and iteration.
    pub rng_seed: u64,
}

pub trait Executor: Send + Sync {
    fn execute(&self, seed: &AgentSeed, ctx: &RunContext<'_>) -> RunOutcome;
}

impl<E: Executor + ?Sized> Executor for Box<E> {
    fn execute(&self, seed: &AgentSeed, ctx: &RunContext<'_>) -> RunOutcome {
        (**self).execute(seed, ctx)
    }
}

impl<E: Executor + ?Sized> Executor for std::sync::Arc<E> {
    fn execute(&self, seed: &AgentSeed, ctx: &RunContext<'_>) -> RunOutcome {
        (**self).execute(seed, ctx)
    }
}

/// Executor backed by a closure. Handy for scripted tests.
pub struct FnExecutor<F>(pub F);

impl<F> Executor for FnExecutor<F>
where
    F: Fn(&AgentSeed, &RunContext<'_>) -> RunOutcome + Send + Sync,
{
    fn execute(&self, seed: &AgentSeed, ctx: &RunContext<'_>) -> RunOutcome {
        (self.0)(seed, ctx)
    }
}

/// Outcome with a single experiment at `score`.
pub fn single_score(score: f64) -> RunOutcome {
    RunOutcome::from_experiments(
        vec![ExperimentRecord { run_name: "run_0".into(), score, metric_name: "score".into(), notes: None }],
        MetricDirection::HIGHER,
    )
}
