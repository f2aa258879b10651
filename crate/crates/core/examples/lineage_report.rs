//! Export tournament statistics, best-score progression and lineage edges
//! from a finished run as CSV.

use seedevo::engine::run_evolution;
use seedevo::executor::{SimModelParams, SimulatedExecutor};
use seedevo::lineage::{export_report, LineageLog, LineageReport, ReportFormat};
use seedevo::EngineConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let config = EngineConfig { master_seed: 3, max_iterations: 8, ..EngineConfig::default() };
    let root = dir.path().join("run");
    run_evolution(config, SimulatedExecutor::new(SimModelParams::default()), &root)?;

    let log = LineageLog::read(&root.join("events.jsonl"))?;
    let report = LineageReport::build(&log);
    for path in export_report(&report, ReportFormat::Csv, &dir.path().join("report"))? {
        println!("== {}", path.file_name().unwrap().to_string_lossy());
        for line in std::fs::read_to_string(&path)?.lines().take(6) {
            println!("{line}");
        }
    }
    Ok(())
}
