//! Plug a closure in as the executor. Here a lower-is-better metric where
//! each slot's loss shrinks with the iteration number, except one crash.

use seedevo::engine::{run_evolution, Event};
use seedevo::executor::{single_score, FnExecutor, RunContext, RunOutcome};
use seedevo::engine::AgentSeed;
use seedevo::{EngineConfig, MetricDirection};

fn agent(seed: &AgentSeed, _ctx: &RunContext<'_>) -> RunOutcome {
    if seed.iteration == 2 && seed.slot == 1 {
        return RunOutcome::failed("agent exhausted its step budget");
    }
    single_score(1.0 / (seed.iteration as f64 + seed.slot as f64))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let config = EngineConfig {
        population: 3,
        max_iterations: 4,
        direction: MetricDirection::LOWER,
        ..EngineConfig::default()
    };
    let (summary, events) = run_evolution(config, FnExecutor(agent), &dir.path().join("run"))?;
    for e in &events {
        if let Event::Tournament(t) = e {
            println!(
                "{} {:<9} parent {:?} child {:?} delta {:?} won {}",
                t.child_id,
                t.operator.name(),
                t.parent_score,
                t.child_score,
                t.delta,
                t.child_won
            );
        }
    }
    println!("best: {:?} after {} iterations", summary.best.and_then(|b| b.score), summary.iterations);
    Ok(())
}
