use serde::{Deserialize, Serialize};

use crate::metric::MetricDirection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Best-so-far failed to improve for `patience` consecutive iterations.
    Converged,
    /// The iteration cap was reached.
    Budget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "decision", content = "reason")]
pub enum StopDecision {
    Continue,
    Stop(StopReason),
}

/// Budget-and-convergence stopping rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingState {
    pub best_so_far: Option<f64>,
    pub stagnation_count: u32,
    pub threshold: f64,
    pub patience: u32,
    pub max_iterations: u32,
}

impl StoppingState {
    pub fn new(threshold: f64, patience: u32, max_iterations: u32) -> Self {
        StoppingState { best_so_far: None, stagnation_count: 0, threshold, patience, max_iterations }
    }

    /// Record the elite pool's best after `iteration`.
    ///
    /// Only an improvement strictly greater than the threshold resets the
    /// stagnation counter. A missing best (every slot empty) counts as stagnation.
    pub fn update(&mut self, iteration: u32, iteration_best: Option<f64>, direction: MetricDirection) -> StopDecision {
        let improved = match (self.best_so_far, iteration_best) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some(best), Some(now)) => direction.delta(now, best) > self.threshold,
        };
        if improved {
            self.best_so_far = iteration_best;
            self.stagnation_count = 0;
        } else {
            self.stagnation_count += 1;
        }
        if self.stagnation_count >= self.patience {
            StopDecision::Stop(StopReason::Converged)
        } else if iteration >= self.max_iterations {
            StopDecision::Stop(StopReason::Budget)
        } else {
            StopDecision::Continue
        }
    }
}
