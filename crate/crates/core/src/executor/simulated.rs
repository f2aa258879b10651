//! Stochastic stand-in for an autonomous run.
//!
//! Scores live in "oriented" space: a gain always moves the score in the
//! favourable direction, and Initial noise is multiplied by the direction
//! sign. Negating every mean and flipping the direction therefore negates
//! every simulated score exactly, draw for draw.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::engine::AgentSeed;
use crate::metric::MetricDirection;
use crate::operator::Operator;
use crate::rng;

use super::{Executor, ExperimentRecord, RunContext, RunOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialModel {
    pub base_mean: f64,
    pub base_sd: f64,
    pub failure_prob: f64,
}

/// Direction-aware gain over the elite parent, `N(gain_mean, gain_sd)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainModel {
    pub gain_mean: f64,
    pub gain_sd: f64,
    pub failure_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimModelParams {
    pub direction: MetricDirection,
    pub initial: InitialModel,
    pub operators: BTreeMap<Operator, GainModel>,
    /// Spread of the non-best synthetic experiments below the run score.
    pub experiment_sd: f64,
    pub metric_name: String,
}

impl Default for SimModelParams {
    /// Archive-conditioned operators sit near zero mean gain while Initial
    /// redraws from the base distribution, so Initial rarely beats an elite
    /// that selection has already pushed upward.
    fn default() -> Self {
        let gain = |gain_mean| GainModel { gain_mean, gain_sd: 0.01, failure_prob: 0.05 };
        SimModelParams {
            direction: MetricDirection::HIGHER,
            initial: InitialModel { base_mean: 0.80, base_sd: 0.02, failure_prob: 0.05 },
            operators: [
                (Operator::Continue, gain(0.001)),
                (Operator::Merge, gain(0.004)),
                (Operator::Eda, gain(-0.001)),
                (Operator::Ablation, gain(-0.0015)),
                (Operator::Jumpstart, gain(0.001)),
            ]
            .into_iter()
            .collect(),
            experiment_sd: 0.01,
            metric_name: "score".into(),
        }
    }
}

impl SimModelParams {
    pub fn validate(&self) -> Result<(), String> {
        let prob = |p: f64, what: &str| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(format!("{what} failure_prob {p} outside [0, 1]"))
            }
        };
        let finite_sd = |sd: f64, what: &str| {
            if sd >= 0.0 && sd.is_finite() {
                Ok(())
            } else {
                Err(format!("{what} sd {sd} must be finite and non-negative"))
            }
        };
        if !self.initial.base_mean.is_finite() {
            return Err("initial base_mean must be finite".into());
        }
        finite_sd(self.initial.base_sd, "initial")?;
        prob(self.initial.failure_prob, "initial")?;
        for (op, m) in &self.operators {
            if *op == Operator::Initial {
                return Err("Initial is configured through `initial`, not `operators`".into());
            }
            if !m.gain_mean.is_finite() {
                return Err(format!("{op} gain_mean must be finite"));
            }
            finite_sd(m.gain_sd, op.name())?;
            prob(m.failure_prob, op.name())?;
        }
        finite_sd(self.experiment_sd, "experiment")
    }

    /// Same model for the opposite metric orientation, with scores negated.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        out.direction = self.direction.flipped();
        out.initial.base_mean = -self.initial.base_mean;
        out
    }
}

/// Draw one run for `seed`.
///
/// Draw order is fixed: score noise, failure, best-experiment index, then the
/// other experiments. Operators without a gain model use a zero-mean,
/// zero-spread gain.
pub fn simulate_run<R: Rng + ?Sized>(seed: &AgentSeed, params: &SimModelParams, rng: &mut R) -> RunOutcome {
    let sign = params.direction.sign();
    let (failure_prob, score) = match seed.parents.first() {
        None => {
            let m = &params.initial;
            let z: f64 = StandardNormal.sample(rng);
            (m.failure_prob, m.base_mean + sign * m.base_sd * z)
        }
        Some(parent) => {
            let m = params.operators.get(&seed.operator).cloned().unwrap_or(GainModel {
                gain_mean: 0.0,
                gain_sd: 0.0,
                failure_prob: 0.0,
            });
            let z: f64 = StandardNormal.sample(rng);
            (m.failure_prob, parent.score + sign * (m.gain_mean + m.gain_sd * z))
        }
    };
    let failed = rng.random::<f64>() < failure_prob;
    if failed {
        return RunOutcome::failed("simulated run produced no scored experiment");
    }

    let runs = seed.context.num_training_runs.max(1) as usize;
    let best_index = rng.random_range(0..runs);
    let experiments = (0..runs)
        .map(|i| {
            let value = if i == best_index {
                score
            } else {
                let z: f64 = StandardNormal.sample(rng);
                score - sign * params.experiment_sd * z.abs()
            };
            ExperimentRecord {
                run_name: format!("sim_run_{i}"),
                score: value,
                metric_name: params.metric_name.clone(),
                notes: None,
            }
        })
        .collect();
    RunOutcome::from_experiments(experiments, params.direction)
}

#[derive(Debug, Clone, Default)]
pub struct SimulatedExecutor {
    pub params: SimModelParams,
}

impl SimulatedExecutor {
    pub fn new(params: SimModelParams) -> Self {
        SimulatedExecutor { params }
    }
}

impl Executor for SimulatedExecutor {
    fn execute(&self, seed: &AgentSeed, ctx: &RunContext<'_>) -> RunOutcome {
        let mut rng = rng::from_seed(ctx.rng_seed);
        simulate_run(seed, &self.params, &mut rng)
    }
}
