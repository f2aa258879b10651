//! The outer evolutionary loop.
//!
//! Each iteration: snapshot the elite pool, plan one seed per slot, run the
//! children (up to `workers` at a time), then at the barrier settle every
//! slot's 1:1 tournament, feed valid gains to the allocator, apply the
//! stopping rule, append events and write a checkpoint.

mod events;
mod pool;
mod seed;
mod stopping;

use std::io;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::executor::{Executor, RunContext, RunOutcome};
use crate::hedge::{HedgeConfig, HedgeError, HedgeState, ObservedGain};
use crate::metric::MetricDirection;
use crate::operator::Operator;
use crate::rng::{self, Stream};
use crate::workspace::{
    archive_run, load_checkpoint, materialize_seed, remove_tree, save_checkpoint, ArchiveMeta, Checkpoint,
    CheckpointError, CurationRules, DataSource, RunStore, WorkspaceError, SCHEMA_VERSION,
};

pub use events::{read_events, Event, EventLog, HedgeSnapshot, IterationSummary, RunStarted};
pub use pool::{
    plan_iteration, resolve_tournament, select_parents, ChildResult, EliteEntry, ElitePool, Origin, PlanParams,
    TournamentRecord,
};
pub use seed::{seed_id, AgentSeed, ContextParams};
pub use stopping::{StopDecision, StopReason, StoppingState};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Hedge(#[from] HedgeError),
    #[error(transparent)]
    Workspace(#[from] WorkspaceError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("event log: {0}")]
    EventLog(#[from] io::Error),
    #[error("nothing to resume in {0}")]
    NothingToResume(PathBuf),
    #[error("run already finished ({0:?})")]
    Finished(StopReason),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub population: usize,
    pub hedge: HedgeConfig,
    pub max_iterations: u32,
    pub patience: u32,
    pub threshold: f64,
    pub workers: usize,
    pub continue_min_parents: u32,
    pub continue_max_parents: u32,
    pub num_training_runs: u32,
    pub direction: MetricDirection,
    pub data: Option<DataSource>,
    pub curation: CurationRules,
    pub jumpstart_dir: Option<PathBuf>,
    pub master_seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            population: 5,
            hedge: HedgeConfig::default(),
            max_iterations: 30,
            patience: 5,
            threshold: 0.0,
            workers: 3,
            continue_min_parents: 1,
            continue_max_parents: 1,
            num_training_runs: 5,
            direction: MetricDirection::HIGHER,
            data: None,
            curation: CurationRules::default(),
            jumpstart_dir: None,
            master_seed: 0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::Config(m.to_string()));
        if self.population == 0 {
            return bad("population must be at least 1");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        if !self.threshold.is_finite() {
            return bad("convergence threshold must be finite");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if self.continue_min_parents == 0 || self.continue_min_parents > self.continue_max_parents {
            return bad("continue parents need 1 <= min <= max");
        }
        self.hedge.validate()?;
        if self.population == 1 && self.hedge.is_active(Operator::Merge) {
            return bad("Merge is active but a population of 1 has no second parent");
        }
        Ok(())
    }

    fn plan_params(&self, master_seed: u64) -> PlanParams {
        PlanParams {
            population: self.population,
            master_seed,
            continue_parents: (self.continue_min_parents, self.continue_max_parents),
            num_training_runs: self.num_training_runs,
        }
    }
}

/// Final state of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub best: Option<EliteEntry>,
    pub iterations: u32,
    pub reason: StopReason,
}

pub struct Engine<E> {
    config: EngineConfig,
    executor: E,
    store: RunStore,
    log: EventLog,
    master_seed: u64,
    iteration: u32,
    pool: ElitePool,
    hedge: HedgeState,
    stopping: StoppingState,
    finished: Option<StopReason>,
}

impl<E: Executor> Engine<E> {
    /// Start a fresh run in `root`, which must not already hold one.
    pub fn new(config: EngineConfig, executor: E, root: impl Into<PathBuf>) -> Result<Self, EngineError> {
        config.validate()?;
        let store = RunStore::create(root)?;
        let mut log = EventLog::create(&store.events_path())?;
        log.append(&[Event::RunStarted(RunStarted {
            schema_version: SCHEMA_VERSION,
            population: config.population,
            higher_is_better: config.direction.higher_is_better,
            master_seed: config.master_seed,
        })])?;
        let engine = Engine {
            hedge: HedgeState::new(config.hedge.clone())?,
            stopping: StoppingState::new(config.threshold, config.patience, config.max_iterations),
            pool: ElitePool::new(config.direction),
            master_seed: config.master_seed,
            iteration: 0,
            finished: None,
            config,
            executor,
            store,
            log,
        };
        engine.checkpoint()?;
        Ok(engine)
    }

    /// Continue a run from its last checkpoint. Work from any iteration after
    /// the checkpoint (workspaces, archives, log lines) is discarded first.
    pub fn resume(config: EngineConfig, executor: E, root: impl Into<PathBuf>) -> Result<Self, EngineError> {
        config.validate()?;
        let store = RunStore::open(root);
        let cp = load_checkpoint(store.root())?.ok_or_else(|| EngineError::NothingToResume(store.root().into()))?;
        if cp.master_seed != config.master_seed {
            return Err(EngineError::Config(format!(
                "checkpoint seed {} does not match configured seed {}",
                cp.master_seed, config.master_seed
            )));
        }
        if cp.pool.direction != config.direction || (cp.iteration > 0 && cp.pool.len() != config.population) {
            return Err(EngineError::Config("checkpoint does not match the configured population or direction".into()));
        }
        discard_after(&store, cp.iteration)?;
        let log = EventLog::reopen_at(&store.events_path(), cp.event_offset)?;
        Ok(Engine {
            master_seed: cp.master_seed,
            iteration: cp.iteration,
            pool: cp.pool,
            hedge: cp.hedge,
            stopping: cp.stopping,
            finished: cp.finished,
            config,
            executor,
            store,
            log,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn store(&self) -> &RunStore {
        &self.store
    }

    pub fn iteration(&self) -> u32 {
        self.iteration
    }

    pub fn pool(&self) -> &ElitePool {
        &self.pool
    }

    pub fn hedge(&self) -> &HedgeState {
        &self.hedge
    }

    pub fn stopping(&self) -> &StoppingState {
        &self.stopping
    }

    pub fn finished(&self) -> Option<StopReason> {
        self.finished
    }

    /// Run one iteration through its barrier and checkpoint.
    pub fn step(&mut self) -> Result<IterationSummary, EngineError> {
        if let Some(reason) = self.finished {
            return Err(EngineError::Finished(reason));
        }
        let t = self.iteration + 1;
        let direction = self.config.direction;
        let seeds = plan_iteration(&self.pool, &self.hedge, t, &self.config.plan_params(self.master_seed))?;
        let children = self.dispatch(&seeds);

        let snapshot = self.pool.clone();
        let mut entries = Vec::with_capacity(children.len());
        let mut events = Vec::with_capacity(children.len() + 2);
        let mut gains = Vec::new();
        for child in &children {
            let incumbent = if t == 1 { None } else { snapshot.entries.get(child.seed.slot) };
            let (entry, record) = resolve_tournament(child, incumbent, direction);
            if let (true, Some(delta)) = (record.contested, record.delta) {
                if self.hedge.config().is_active(record.operator) {
                    gains.push(ObservedGain::new(record.operator, delta));
                }
            }
            entries.push(entry);
            events.push(Event::Tournament(record));
        }
        self.pool.entries = entries;

        let update = if t > 1 { Some(self.hedge.apply_update(&gains)?) } else { None };
        events.push(Event::Hedge(HedgeSnapshot {
            iteration: t,
            update,
            probabilities: self.hedge.sampling_probabilities(),
        }));

        let iteration_best = self.pool.best_score();
        let decision = self.stopping.update(t, iteration_best, direction);
        let summary = IterationSummary {
            iteration: t,
            elite_ids: self.pool.entries.iter().map(|e| e.id().map(String::from)).collect(),
            elite_scores: self.pool.scores(),
            iteration_best,
            best_so_far: self.stopping.best_so_far,
            stagnation_count: self.stopping.stagnation_count,
            decision,
        };
        events.push(Event::Iteration(summary.clone()));
        self.log.append(&events)?;

        self.iteration = t;
        if let StopDecision::Stop(reason) = decision {
            self.finished = Some(reason);
        }
        self.checkpoint()?;
        Ok(summary)
    }

    /// Step until the stopping rule fires.
    pub fn run(&mut self) -> Result<RunSummary, EngineError> {
        while self.finished.is_none() {
            self.step()?;
        }
        Ok(self.summary().expect("finished"))
    }

    pub fn summary(&self) -> Option<RunSummary> {
        self.finished.map(|reason| RunSummary {
            best: self.pool.best().cloned(),
            iterations: self.iteration,
            reason,
        })
    }

    fn checkpoint(&self) -> Result<(), EngineError> {
        let cp = Checkpoint {
            schema_version: SCHEMA_VERSION,
            iteration: self.iteration,
            pool: self.pool.clone(),
            hedge: self.hedge.clone(),
            stopping: self.stopping.clone(),
            master_seed: self.master_seed,
            event_offset: self.log.offset()?,
            finished: self.finished,
        };
        save_checkpoint(&cp, self.store.root())?;
        Ok(())
    }

    fn dispatch(&self, seeds: &[AgentSeed]) -> Vec<ChildResult> {
        let workers = self.config.workers.clamp(1, seeds.len().max(1));
        let next = AtomicUsize::new(0);
        let results: Vec<Mutex<Option<ChildResult>>> = seeds.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(seed) = seeds.get(i) else { break };
                    let child = self.run_child(seed);
                    *results[i].lock().expect("slot result lock") = Some(child);
                });
            }
        });
        results.into_iter().map(|m| m.into_inner().expect("slot result lock").expect("every slot ran")).collect()
    }

    fn run_child(&self, seed: &AgentSeed) -> ChildResult {
        let fail = |outcome: RunOutcome| ChildResult { seed: seed.clone(), outcome, archive: None };
        let ws_dir = self.store.workspace_dir(&seed.id);
        let ws = match materialize_seed(
            seed,
            &ws_dir,
            self.config.data.as_ref(),
            &self.config.curation,
            self.config.jumpstart_dir.as_deref(),
        ) {
            Ok(ws) => ws,
            Err(e) => {
                log::warn!("{}: materialization failed: {e}", seed.id);
                return fail(RunOutcome::failed(format!("materialization failed: {e}")));
            }
        };
        let ctx = RunContext {
            workspace: &ws.root,
            manifest: &ws.manifest_path,
            data: ws.data_path.as_deref(),
            rng_seed: rng::derive_seed(self.master_seed, seed.iteration, seed.slot, Stream::Execute),
        };
        let outcome = catch_unwind(AssertUnwindSafe(|| self.executor.execute(seed, &ctx)))
            .unwrap_or_else(|_| RunOutcome::failed("executor panicked"))
            .enforce_verification();
        if !outcome.is_valid() {
            return fail(outcome);
        }
        let meta = ArchiveMeta {
            operator: seed.operator,
            iteration: seed.iteration,
            slot: seed.slot,
            parent_ids: seed.parents.iter().map(|p| p.id.clone()).collect(),
        };
        match archive_run(&ws.root, &outcome, &seed.id, meta, &self.store.archive_dir(&seed.id)) {
            Ok(archive) => ChildResult { seed: seed.clone(), outcome, archive: Some(archive) },
            Err(e) => {
                log::warn!("{}: archiving failed: {e}", seed.id);
                fail(outcome.with_diagnostic("archive", e.to_string()))
            }
        }
    }
}

/// Iteration encoded in a seed id, if it has the `it<N>-slot<M>` shape.
fn id_iteration(name: &str) -> Option<u32> {
    name.strip_prefix("it")?.split('-').next()?.parse().ok()
}

fn discard_after(store: &RunStore, iteration: u32) -> Result<(), EngineError> {
    for dir in [store.workspaces_dir(), store.archives_dir()] {
        let Ok(entries) = std::fs::read_dir(&dir) else { continue };
        for entry in entries.flatten() {
            let name = entry.file_name().to_string_lossy().into_owned();
            if id_iteration(&name).is_some_and(|it| it > iteration) {
                remove_tree(&entry.path())?;
            }
        }
    }
    Ok(())
}

/// Run a fresh engine to completion and return the best elite with the event log.
pub fn run_evolution<E: Executor>(
    config: EngineConfig,
    executor: E,
    root: &Path,
) -> Result<(RunSummary, Vec<Event>), EngineError> {
    let mut engine = Engine::new(config, executor, root)?;
    let summary = engine.run()?;
    let events = read_events(&engine.store().events_path())?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| EngineError::EventLog(io::Error::other(e)))?;
    Ok((summary, events))
}
