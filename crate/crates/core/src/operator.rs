use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Seed-construction rule for a child run.
///
/// Variants are declared in name order so the derived `Ord` matches the
/// lexicographic order of [`Operator::name`]. Rank tie-breaking relies on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Operator {
    /// Add or remove one component of the elite parent at a time.
    Ablation,
    /// Refine the elite parent, optionally with extra random elites visible.
    Continue,
    /// Analyse the data first, then change features or models.
    #[serde(rename = "EDA")]
    Eda,
    /// No parents.
    Initial,
    /// Elite parent plus external reference material.
    Jumpstart,
    /// Elite parent plus one random elite from another slot.
    Merge,
}

impl Operator {
    pub const ALL: [Operator; 6] = [
        Operator::Ablation,
        Operator::Continue,
        Operator::Eda,
        Operator::Initial,
        Operator::Jumpstart,
        Operator::Merge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operator::Ablation => "Ablation",
            Operator::Continue => "Continue",
            Operator::Eda => "EDA",
            Operator::Initial => "Initial",
            Operator::Jumpstart => "Jumpstart",
            Operator::Merge => "Merge",
        }
    }

    /// Whether children of this operator inherit the slot's elite archive.
    pub fn is_parent_conditioned(self) -> bool {
        self != Operator::Initial
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown operator `{0}`")]
pub struct UnknownOperator(pub String);

impl FromStr for Operator {
    type Err = UnknownOperator;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Operator::ALL
            .into_iter()
            .find(|op| op.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownOperator(s.to_string()))
    }
}
