use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::executor::RunOutcome;
use crate::hedge::HedgeState;
use crate::metric::MetricDirection;
use crate::operator::Operator;
use crate::rng::{self, Stream};
use crate::workspace::ArchiveRef;

use super::seed::{seed_id, AgentSeed, ContextParams};
use super::EngineError;

/// Where an elite came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Origin {
    pub iteration: u32,
    pub operator: Operator,
    pub parent_slots: Vec<usize>,
}

/// Best solution held by one population slot.
///
/// `score` and `archive` are `None` only for the empty placeholder left by a
/// failed first-iteration run; any valid child beats it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliteEntry {
    pub slot: usize,
    pub score: Option<f64>,
    pub archive: Option<ArchiveRef>,
    pub origin: Origin,
}

impl EliteEntry {
    pub fn empty(slot: usize, iteration: u32, operator: Operator) -> Self {
        EliteEntry { slot, score: None, archive: None, origin: Origin { iteration, operator, parent_slots: vec![] } }
    }

    pub fn is_empty(&self) -> bool {
        self.archive.is_none()
    }

    pub fn id(&self) -> Option<&str> {
        self.archive.as_ref().map(|a| a.id.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElitePool {
    pub entries: Vec<EliteEntry>,
    pub direction: MetricDirection,
}

impl ElitePool {
    pub fn new(direction: MetricDirection) -> Self {
        ElitePool { entries: Vec::new(), direction }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn best(&self) -> Option<&EliteEntry> {
        let mut best: Option<&EliteEntry> = None;
        for e in &self.entries {
            let Some(s) = e.score else { continue };
            match best.and_then(|b| b.score) {
                Some(b) if !self.direction.is_better(s, b) => {}
                _ => best = Some(e),
            }
        }
        best
    }

    pub fn best_score(&self) -> Option<f64> {
        self.best().and_then(|e| e.score)
    }

    pub fn scores(&self) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.score).collect()
    }
}

/// Parents for a parent-conditioned operator, elite first.
///
/// Merge adds one elite drawn uniformly from the other non-empty slots.
/// Continue draws a parent count in `[min, max]` and adds that many minus one
/// distinct elites from the other non-empty slots (fewer if not enough exist).
/// Initial returns no parents; every other operator returns the elite alone.
pub fn select_parents<R: Rng + ?Sized>(
    operator: Operator,
    pool: &ElitePool,
    slot: usize,
    continue_parents: (u32, u32),
    rng: &mut R,
) -> Result<Vec<EliteEntry>, EngineError> {
    if operator == Operator::Initial {
        return Ok(Vec::new());
    }
    let own = pool
        .entries
        .get(slot)
        .ok_or_else(|| EngineError::Config(format!("slot {slot} outside a pool of {}", pool.len())))?;
    let others: Vec<&EliteEntry> = pool.entries.iter().filter(|e| e.slot != slot && !e.is_empty()).collect();
    let mut parents = vec![own.clone()];
    match operator {
        Operator::Merge => {
            if pool.len() < 2 {
                return Err(EngineError::Config("Merge needs a population of at least 2".into()));
            }
            if let Some(other) = others.choose(rng) {
                parents.push((*other).clone());
            }
        }
        Operator::Continue => {
            let (min, max) = continue_parents;
            let count = rng.random_range(min.max(1)..=max.max(min).max(1)) as usize;
            parents.extend(others.choose_multiple(rng, count - 1).map(|e| (*e).clone()));
        }
        _ => {}
    }
    Ok(parents)
}

/// Knobs [`plan_iteration`] needs beyond the pool and allocator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanParams {
    pub population: usize,
    pub master_seed: u64,
    pub continue_parents: (u32, u32),
    pub num_training_runs: u32,
}

/// One seed per slot for `iteration`.
///
/// Iteration 1 is all Initial. Later, each slot samples an operator from its
/// own random stream. A slot whose elite is empty is seeded with Initial, and
/// a Merge that finds no second non-empty elite runs as Continue.
pub fn plan_iteration(
    pool: &ElitePool,
    hedge: &HedgeState,
    iteration: u32,
    params: &PlanParams,
) -> Result<Vec<AgentSeed>, EngineError> {
    (0..params.population)
        .map(|slot| {
            let context = ContextParams::new(params.num_training_runs);
            let id = seed_id(iteration, slot);
            if iteration <= 1 {
                return Ok(AgentSeed { id, iteration, slot, operator: Operator::Initial, parents: vec![], context });
            }
            let mut rng = rng::stream(params.master_seed, iteration, slot, Stream::Plan);
            let mut operator = hedge.sample_task(&mut rng);
            if pool.entries.get(slot).is_none_or(EliteEntry::is_empty) {
                operator = Operator::Initial;
            }
            let parents = select_parents(operator, pool, slot, params.continue_parents, &mut rng)?;
            if operator == Operator::Merge && parents.len() < 2 {
                operator = Operator::Continue;
            }
            let parents = parents.into_iter().filter_map(|e| e.archive).collect();
            Ok(AgentSeed { id, iteration, slot, operator, parents, context })
        })
        .collect()
}

/// One child-vs-elite comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentRecord {
    pub iteration: u32,
    pub slot: usize,
    pub operator: Operator,
    pub child_id: String,
    pub parent_ids: Vec<String>,
    pub parent_score: Option<f64>,
    pub child_score: Option<f64>,
    /// Direction-aware improvement; present iff the child is valid and both scores exist.
    pub delta: Option<f64>,
    pub child_won: bool,
    pub child_valid: bool,
    /// `false` for first-iteration installs, which have no elite parent.
    pub contested: bool,
}

/// Result of a finished child run, as seen by the tournament.
#[derive(Debug, Clone, PartialEq)]
pub struct ChildResult {
    pub seed: AgentSeed,
    pub outcome: RunOutcome,
    pub archive: Option<ArchiveRef>,
}

impl ChildResult {
    pub fn is_valid(&self) -> bool {
        self.outcome.is_valid() && self.archive.is_some()
    }
}

/// Settle a slot. The first iteration installs the child unconditionally
/// (an invalid child leaves an empty elite). Later iterations replace the
/// incumbent only with a valid child that is strictly better.
pub fn resolve_tournament(
    child: &ChildResult,
    incumbent: Option<&EliteEntry>,
    direction: MetricDirection,
) -> (EliteEntry, TournamentRecord) {
    let seed = &child.seed;
    let valid = child.is_valid();
    let child_score = child.outcome.score.filter(|s| s.is_finite());
    let installed = || EliteEntry {
        slot: seed.slot,
        score: child_score,
        archive: child.archive.clone(),
        origin: Origin {
            iteration: seed.iteration,
            operator: seed.operator,
            parent_slots: seed.parents.iter().map(|p| p.meta.slot).collect(),
        },
    };
    let mut record = TournamentRecord {
        iteration: seed.iteration,
        slot: seed.slot,
        operator: seed.operator,
        child_id: seed.id.clone(),
        parent_ids: seed.parents.iter().map(|p| p.id.clone()).collect(),
        parent_score: None,
        child_score,
        delta: None,
        child_won: false,
        child_valid: valid,
        contested: false,
    };

    let Some(incumbent) = incumbent else {
        record.child_won = valid;
        let entry = if valid { installed() } else { EliteEntry::empty(seed.slot, seed.iteration, seed.operator) };
        return (entry, record);
    };

    record.contested = true;
    record.parent_score = incumbent.score;
    if !valid {
        return (incumbent.clone(), record);
    }
    let score = child_score.expect("valid child has a score");
    let won = match incumbent.score {
        None => true,
        Some(parent) => {
            record.delta = Some(direction.delta(score, parent));
            direction.is_better(score, parent)
        }
    };
    record.child_won = won;
    if won {
        (installed(), record)
    } else {
        (incumbent.clone(), record)
    }
}
