use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::operator::Operator;
use crate::workspace::ArchiveRef;

/// Task-template parameters passed to the child run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextParams {
    pub num_training_runs: u32,
    #[serde(flatten)]
    pub extra: BTreeMap<String, String>,
}

impl ContextParams {
    pub fn new(num_training_runs: u32) -> Self {
        ContextParams { num_training_runs, extra: BTreeMap::new() }
    }
}

/// Starting condition of one child run: an operator plus inherited archives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSeed {
    /// `it<iteration>-slot<slot>`; doubles as the workspace and archive name.
    pub id: String,
    pub iteration: u32,
    pub slot: usize,
    pub operator: Operator,
    /// `parents[0]` is the slot's elite whenever parents are present.
    pub parents: Vec<ArchiveRef>,
    pub context: ContextParams,
}

pub fn seed_id(iteration: u32, slot: usize) -> String {
    format!("it{iteration:04}-slot{slot:02}")
}

impl AgentSeed {
    /// Whether the parent count fits the operator.
    pub fn arity_ok(&self) -> bool {
        let n = self.parents.len();
        match self.operator {
            Operator::Initial => n == 0,
            Operator::Ablation | Operator::Eda | Operator::Jumpstart => n == 1,
            Operator::Continue => n >= 1,
            Operator::Merge => n == 2,
        }
    }
}
