//! Drive a full evolutionary run with the simulated executor, one iteration
//! at a time, printing the elite pool and operator probabilities.

use seedevo::engine::{Engine, StopDecision};
use seedevo::executor::{SimModelParams, SimulatedExecutor};
use seedevo::EngineConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let config = EngineConfig { master_seed: 2024, ..EngineConfig::default() };
    let executor = SimulatedExecutor::new(SimModelParams::default());
    let mut engine = Engine::new(config, executor, dir.path().join("run"))?;

    loop {
        let summary = engine.step()?;
        let scores: Vec<String> = summary
            .elite_scores
            .iter()
            .map(|s| s.map_or("  --  ".to_string(), |s| format!("{s:.4}")))
            .collect();
        let probs = engine.hedge().sampling_probabilities();
        let top = probs.iter().max_by(|a, b| a.1.total_cmp(b.1)).map(|(op, p)| format!("{}={p:.2}", op.name()));
        println!(
            "it {:>2}  elites [{}]  stagnation {}  top {}",
            summary.iteration,
            scores.join(" "),
            summary.stagnation_count,
            top.unwrap_or_default()
        );
        if let StopDecision::Stop(reason) = summary.decision {
            println!("stopped: {reason:?}");
            break;
        }
    }
    let best = engine.pool().best().expect("at least one verified run");
    println!("best {} = {:.4} via {}", best.id().unwrap_or("-"), best.score.unwrap_or(f64::NAN), best.origin.operator.name());
    Ok(())
}
