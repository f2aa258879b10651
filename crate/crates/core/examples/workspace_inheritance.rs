//! Archive a finished run, then materialize a child that inherits it.
//! Bulky files and nested inheritance are filtered out of the copy.

use seedevo::engine::{seed_id, AgentSeed, ContextParams};
use seedevo::executor::{ExperimentRecord, RunOutcome};
use seedevo::workspace::{archive_run, materialize_seed, ArchiveMeta, CurationRules, PREVIOUS_EXPERIMENTS_DIR};
use seedevo::{MetricDirection, Operator};
use walkdir::WalkDir;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let rules = CurationRules::default();

    let parent_seed = AgentSeed {
        id: seed_id(1, 0),
        iteration: 1,
        slot: 0,
        operator: Operator::Initial,
        parents: vec![],
        context: ContextParams::new(5),
    };
    let ws = materialize_seed(&parent_seed, &dir.path().join("ws/parent"), None, &rules, None)?;
    std::fs::write(ws.root.join("train.py"), "print('fit')\n")?;
    std::fs::write(ws.root.join("model.pkl"), vec![0u8; 4096])?;
    std::fs::create_dir_all(ws.root.join("notes"))?;
    std::fs::write(ws.root.join("notes/ideas.md"), "- try target encoding\n")?;

    let outcome = RunOutcome::from_experiments(
        vec![ExperimentRecord { run_name: "baseline".into(), score: 0.79, metric_name: "auc".into(), notes: None }],
        MetricDirection::HIGHER,
    );
    let meta = ArchiveMeta { operator: Operator::Initial, iteration: 1, slot: 0, parent_ids: vec![] };
    let archive = archive_run(&ws.root, &outcome, &parent_seed.id, meta, &dir.path().join("archives/parent"))?;
    println!("archived {} with score {}", archive.id, archive.score);

    let child_seed = AgentSeed {
        id: seed_id(2, 0),
        iteration: 2,
        slot: 0,
        operator: Operator::Continue,
        parents: vec![archive],
        context: ContextParams::new(5),
    };
    let child = materialize_seed(&child_seed, &dir.path().join("ws/child"), None, &rules, None)?;
    println!("child workspace:");
    for entry in WalkDir::new(child.root.join(PREVIOUS_EXPERIMENTS_DIR)).sort_by_file_name() {
        let entry = entry?;
        let rel = entry.path().strip_prefix(&child.root)?;
        println!("  {}", rel.display());
    }
    println!("manifest:\n{}", std::fs::read_to_string(&child.manifest_path)?);
    Ok(())
}
