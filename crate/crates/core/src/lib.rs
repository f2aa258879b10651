//! Evolutionary search over agent seeds.
//!
//! A seed is a task operator plus a set of inherited parent archives. Each
//! iteration launches one fresh run per population slot, resolves a 1:1
//! tournament against the slot's elite, and feeds direction-aware gains back
//! into a bounded, rank-based Hedge allocator that decides how often each
//! operator is sampled.
//!
//! Module map:
//!
//! - [`hedge`]: operator allocation (softmax over log-weights, rank rewards,
//!   clipped importance weighting, floor/ceiling projection).
//! - [`engine`]: the outer loop, elite pool, tournaments and stopping policy.
//! - [`workspace`]: isolated run directories, curated parent archives and
//!   checkpoints.
//! - [`executor`]: the run contract, a simulated agent and an external
//!   command runner.
//! - [`compress`]: long-horizon transcript compression under a token budget.
//! - [`lineage`]: tournament statistics and report export.
//! - [`config`] and [`cli`]: run configuration and the command surface.
//!
//! The runnable programs under `examples/` walk through each capability.

pub mod cli;
pub mod compress;
pub mod config;
pub mod engine;
pub mod executor;
pub mod hedge;
pub mod lineage;
pub mod metric;
pub mod operator;
pub mod rng;
pub mod workspace;

pub use engine::{Engine, EngineConfig};
pub use hedge::{HedgeConfig, HedgeState, ObservedGain};
pub use metric::MetricDirection;
pub use operator::Operator;
