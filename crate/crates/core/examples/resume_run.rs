//! Stop a run after two iterations, resume it from its checkpoint and check
//! the event log matches an uninterrupted run byte for byte.

use seedevo::engine::Engine;
use seedevo::executor::{SimModelParams, SimulatedExecutor};
use seedevo::EngineConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let config = EngineConfig { master_seed: 5, max_iterations: 5, ..EngineConfig::default() };
    let sim = || SimulatedExecutor::new(SimModelParams::default());

    let straight = dir.path().join("straight");
    Engine::new(config.clone(), sim(), &straight)?.run()?;

    let split = dir.path().join("split");
    {
        let mut engine = Engine::new(config.clone(), sim(), &split)?;
        engine.step()?;
        engine.step()?;
        println!("interrupted after iteration {}", engine.iteration());
    }
    let mut engine = Engine::resume(config, sim(), &split)?;
    println!("resumed at iteration {}", engine.iteration());
    let summary = engine.run()?;
    println!("finished after {} iterations ({:?})", summary.iterations, summary.reason);

    let a = std::fs::read(straight.join("events.jsonl"))?;
    let b = std::fs::read(split.join("events.jsonl"))?;
    println!("event logs identical: {} ({} bytes)", a == b, a.len());
    Ok(())
}
