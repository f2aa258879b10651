//! Run seeded simulated evolutions until 1000 tournaments have been played
//! and print per-operator win rates.

use seedevo::cli::format_stats_table;
use seedevo::executor::SimModelParams;
use seedevo::lineage::{compute_operator_stats, simulate_tournaments};
use seedevo::EngineConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let started = std::time::Instant::now();
    let config = EngineConfig { master_seed: 11, ..EngineConfig::default() };
    let log = simulate_tournaments(&config, &SimModelParams::default(), 1000, dir.path())?;
    let (stats, _) = compute_operator_stats(&log);
    print!("{}", format_stats_table(&stats));
    println!("{} runs in {:.1?}", log.runs.len(), started.elapsed());
    Ok(())
}
