//! Bounded, rank-based Hedge allocation over task operators.
//!
//! Per update: group observed gains by operator and average them, turn the
//! means into evenly spaced ranks in `[-1, 1]`, scale each reward by a clipped
//! importance factor `min(1/p, kappa)`, and add `eta` times the result to the
//! operator's log-weight. Sampling probabilities are the softmax of the
//! log-weights projected onto the configured floors and ceilings.
//!
//! Operators with base probability 0 never enter the active set.

mod bounds;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::operator::Operator;

pub use bounds::{enforce_bounds, Bounded};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HedgeError {
    #[error("invalid hedge configuration: {0}")]
    InvalidConfig(String),
    #[error("operator {0} is not in the active task set")]
    InactiveOperator(Operator),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HedgeConfig {
    pub base_probs: BTreeMap<Operator, f64>,
    pub floors: BTreeMap<Operator, f64>,
    pub ceilings: BTreeMap<Operator, f64>,
    pub eta: f64,
    pub kappa: f64,
    pub max_bound_iterations: u32,
}

impl Default for HedgeConfig {
    fn default() -> Self {
        use Operator::*;
        HedgeConfig {
            base_probs: [
                (Initial, 0.1),
                (Continue, 0.2),
                (Ablation, 0.1),
                (Merge, 0.1),
                (Jumpstart, 0.0),
                (Eda, 0.5),
            ]
            .into_iter()
            .collect(),
            floors: [
                (Continue, 0.10),
                (Ablation, 0.05),
                (Merge, 0.05),
                (Initial, 0.05),
                (Jumpstart, 0.05),
                (Eda, 0.05),
            ]
            .into_iter()
            .collect(),
            ceilings: [(Merge, 0.30)].into_iter().collect(),
            eta: 0.15,
            kappa: 4.0,
            max_bound_iterations: 10,
        }
    }
}

impl HedgeConfig {
    /// Operators with positive base probability, in name order.
    pub fn active_tasks(&self) -> Vec<Operator> {
        self.base_probs.iter().filter(|(_, &p)| p > 0.0).map(|(&k, _)| k).collect()
    }

    pub fn is_active(&self, op: Operator) -> bool {
        self.base_probs.get(&op).is_some_and(|&p| p > 0.0)
    }

    pub fn validate(&self) -> Result<(), HedgeError> {
        let bad = |msg: String| Err(HedgeError::InvalidConfig(msg));
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return bad(format!("kappa must be at least 1, got {}", self.kappa));
        }
        if self.max_bound_iterations == 0 {
            return bad("max_bound_iterations must be positive".into());
        }
        for (k, &p) in &self.base_probs {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("base probability for {k} is {p}, outside [0, 1]"));
            }
        }
        let active = self.active_tasks();
        if active.is_empty() {
            return bad("no operator has a positive base probability".into());
        }
        let sum: f64 = active.iter().map(|k| self.base_probs[k]).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("active base probabilities sum to {sum}, expected 1"));
        }
        bounds::check_feasible(&active, &self.floors, &self.ceilings)
    }
}

/// One direction-aware child-vs-parent improvement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedGain {
    pub operator: Operator,
    pub delta: f64,
}

impl ObservedGain {
    pub fn new(operator: Operator, delta: f64) -> Self {
        ObservedGain { operator, delta }
    }
}

/// What [`HedgeState::apply_update`] did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpdateReport {
    Skipped { observed: usize },
    Applied {
        rewards: BTreeMap<Operator, f64>,
        /// Reward times the clipped importance factor.
        scaled: BTreeMap<Operator, f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeState {
    log_weights: BTreeMap<Operator, f64>,
    config: HedgeConfig,
}

impl HedgeState {
    /// Log-weights start at `ln(base_prob)` so the first softmax reproduces
    /// the configured base distribution.
    pub fn new(config: HedgeConfig) -> Result<Self, HedgeError> {
        config.validate()?;
        let log_weights = config.active_tasks().into_iter().map(|k| (k, config.base_probs[&k].ln())).collect();
        Ok(HedgeState { log_weights, config })
    }

    pub fn config(&self) -> &HedgeConfig {
        &self.config
    }

    pub fn log_weights(&self) -> &BTreeMap<Operator, f64> {
        &self.log_weights
    }

    pub fn active_tasks(&self) -> impl Iterator<Item = Operator> + '_ {
        self.log_weights.keys().copied()
    }

    /// Check a deserialized state against its own config.
    pub fn validate(&self) -> Result<(), HedgeError> {
        self.config.validate()?;
        if !self.log_weights.keys().copied().eq(self.config.active_tasks()) {
            return Err(HedgeError::InvalidConfig("log-weights are not keyed by the active task set".into()));
        }
        if let Some((k, w)) = self.log_weights.iter().find(|(_, w)| !w.is_finite()) {
            return Err(HedgeError::InvalidConfig(format!("log-weight for {k} is not finite ({w})")));
        }
        Ok(())
    }

    pub fn softmax(&self) -> BTreeMap<Operator, f64> {
        softmax(&self.log_weights)
    }

    /// Bounded post-softmax probabilities used for sampling and importance weighting.
    pub fn sampling_probabilities(&self) -> BTreeMap<Operator, f64> {
        enforce_bounds(
            &self.softmax(),
            &self.config.floors,
            &self.config.ceilings,
            self.config.max_bound_iterations,
        )
        .expect("bounds validated at construction")
        .probs
    }

    pub fn sample_task<R: Rng + ?Sized>(&self, rng: &mut R) -> Operator {
        sample_categorical(&self.sampling_probabilities(), rng)
    }

    /// Apply one iteration's gains. Fewer than two distinct observed
    /// operators leaves the state untouched.
    pub fn apply_update(&mut self, gains: &[ObservedGain]) -> Result<UpdateReport, HedgeError> {
        if let Some(g) = gains.iter().find(|g| !self.log_weights.contains_key(&g.operator)) {
            return Err(HedgeError::InactiveOperator(g.operator));
        }
        let means = aggregate_gains(gains);
        let Some(rewards) = rank_rewards(&means) else {
            return Ok(UpdateReport::Skipped { observed: means.len() });
        };
        let probs = self.sampling_probabilities();
        let kappa = self.config.kappa;
        let scaled: BTreeMap<Operator, f64> =
            rewards.iter().map(|(&k, &r)| (k, clipped_reward(r, probs[&k], kappa))).collect();
        for (k, r) in &scaled {
            *self.log_weights.get_mut(k).expect("checked above") += self.config.eta * r;
        }
        let max = self.log_weights.values().copied().fold(f64::NEG_INFINITY, f64::max);
        for w in self.log_weights.values_mut() {
            *w -= max;
        }
        Ok(UpdateReport::Applied { rewards, scaled })
    }
}

/// `r * min(1/p, kappa)`.
pub fn clipped_reward(reward: f64, prob: f64, kappa: f64) -> f64 {
    let factor = if prob > 0.0 { (1.0 / prob).min(kappa) } else { kappa };
    reward * factor
}

pub fn softmax(log_weights: &BTreeMap<Operator, f64>) -> BTreeMap<Operator, f64> {
    let max = log_weights.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<(Operator, f64)> = log_weights.iter().map(|(&k, &w)| (k, (w - max).exp())).collect();
    let total: f64 = exps.iter().map(|(_, e)| e).sum();
    exps.into_iter().map(|(k, e)| (k, e / total)).collect()
}

/// Categorical draw over `probs` in key order.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &BTreeMap<Operator, f64>, rng: &mut R) -> Operator {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = None;
    for (&k, &p) in probs {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = Some(k);
        if u < acc {
            return k;
        }
    }
    last.expect("at least one operator has positive probability")
}

/// Mean gain per observed operator.
pub fn aggregate_gains(gains: &[ObservedGain]) -> BTreeMap<Operator, f64> {
    let mut sums: BTreeMap<Operator, (f64, usize)> = BTreeMap::new();
    for g in gains {
        let e = sums.entry(g.operator).or_insert((0.0, 0));
        e.0 += g.delta;
        e.1 += 1;
    }
    sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// Evenly spaced rank rewards: worst mean gets -1, best gets +1.
///
/// Returns `None` (skip the update) when fewer than two operators were
/// observed. Equal means are ordered by operator name, name-smaller first.
pub fn rank_rewards(means: &BTreeMap<Operator, f64>) -> Option<BTreeMap<Operator, f64>> {
    let n = means.len();
    if n < 2 {
        return None;
    }
    let mut order: Vec<(Operator, f64)> = means.iter().map(|(&k, &m)| (k, m)).collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let denom = (n - 1) as f64;
    Some(order.into_iter().enumerate().map(|(rank, (k, _))| (k, 2.0 * rank as f64 / denom - 1.0)).collect())
}
