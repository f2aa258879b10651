//! Feed a few iterations of operator gains to the allocator and watch the
//! sampling probabilities move while staying inside their floors and ceilings.

use seedevo::rng;
use seedevo::{HedgeConfig, HedgeState, ObservedGain, Operator};

fn show(label: &str, state: &HedgeState) {
    let probs = state.sampling_probabilities();
    let cells: Vec<String> = probs.iter().map(|(op, p)| format!("{}={:.3}", op.name(), p)).collect();
    println!("{label:<12} {}", cells.join("  "));
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut state = HedgeState::new(HedgeConfig::default())?;
    show("start", &state);

    // Merge keeps producing the best children, EDA the worst.
    let iteration = [
        ObservedGain::new(Operator::Merge, 0.004),
        ObservedGain::new(Operator::Continue, 0.001),
        ObservedGain::new(Operator::Continue, 0.002),
        ObservedGain::new(Operator::Eda, -0.002),
        ObservedGain::new(Operator::Ablation, 0.0),
    ];
    for t in 2..=6 {
        let report = state.apply_update(&iteration)?;
        show(&format!("after it {t}"), &state);
        if t == 2 {
            println!("             {report:?}");
        }
    }

    // One observed operator is not enough to rank anything.
    let report = state.apply_update(&[ObservedGain::new(Operator::Eda, 0.5)])?;
    println!("single operator: {report:?}");

    let mut stream = rng::stream(7, 7, 0, rng::Stream::Plan);
    let draws: Vec<&str> = (0..12).map(|_| state.sample_task(&mut stream).name()).collect();
    println!("draws: {}", draws.join(" "));
    Ok(())
}
