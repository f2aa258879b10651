//! Project a probability vector onto per-operator floors and ceilings.

use std::collections::BTreeMap;

use seedevo::hedge::enforce_bounds;
use seedevo::{HedgeConfig, Operator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = HedgeConfig::default();
    let probs: BTreeMap<Operator, f64> = [
        (Operator::Initial, 0.01),
        (Operator::Continue, 0.04),
        (Operator::Ablation, 0.05),
        (Operator::Merge, 0.60),
        (Operator::Eda, 0.30),
    ]
    .into_iter()
    .collect();

    let bounded = enforce_bounds(&probs, &config.floors, &config.ceilings, config.max_bound_iterations)?;
    println!("{:<10} {:>8} {:>8} {:>8} {:>8}", "operator", "in", "floor", "ceiling", "out");
    for (op, p) in &probs {
        let floor = config.floors.get(op).copied().unwrap_or(0.0);
        let ceiling = config.ceilings.get(op).map_or("-".to_string(), |c| format!("{c:.2}"));
        println!("{:<10} {:>8.4} {:>8.2} {:>8} {:>8.4}", op.name(), p, floor, ceiling, bounded.probs[op]);
    }
    println!("rounds {} stable {} sum {:.12}", bounded.rounds, bounded.stable, bounded.probs.values().sum::<f64>());
    Ok(())
}
