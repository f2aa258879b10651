//! Run a shell script as the agent. It writes two experiment results into
//! its workspace; the executor collects them and verifies the run.

use std::path::Path;

use seedevo::engine::{seed_id, AgentSeed, ContextParams};
use seedevo::executor::{Executor, ExternalExecutor, RunContext};
use seedevo::workspace::{materialize_seed, CurationRules, DataMode, DataSource};
use seedevo::{MetricDirection, Operator};

const AGENT: &str = r#"
d="$GA_WORKSPACE/Experiments/main_training"
mkdir -p "$d/run_a" "$d/run_b"
echo '{"run_name":"run_a","score":0.81,"metric":"auc","higher_is_better":true}' > "$d/run_a/results.json"
echo '{"run_name":"run_b","score":0.84,"metric":"auc","higher_is_better":true}' > "$d/run_b/results.json"
echo "trained on $(cat "$GA_DATA_PATH/train.csv" | wc -l) rows"
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let data = dir.path().join("dataset");
    std::fs::create_dir(&data)?;
    std::fs::write(data.join("train.csv"), "x,y\n1,0\n2,1\n")?;

    let seed = AgentSeed {
        id: seed_id(1, 0),
        iteration: 1,
        slot: 0,
        operator: Operator::Initial,
        parents: vec![],
        context: ContextParams::new(5),
    };
    let source = DataSource { path: data, mode: DataMode::Link };
    let ws = materialize_seed(&seed, &dir.path().join("ws"), Some(&source), &CurationRules::default(), None)?;

    let executor = ExternalExecutor::new(vec!["sh".into(), "-c".into(), AGENT.into()], MetricDirection::HIGHER);
    let ctx = RunContext { workspace: &ws.root, manifest: &ws.manifest_path, data: ws.data_path.as_deref(), rng_seed: 0 };
    let outcome = executor.execute(&seed, &ctx);

    println!("verified {} score {:?}", outcome.verified, outcome.score);
    for e in &outcome.experiments {
        println!("  {} {} = {:?}", e.run_name, e.metric_name, e.score);
    }
    let stdout = std::fs::read_to_string(Path::new(&ws.root).join("logs/agent.stdout"))?;
    print!("agent said: {stdout}");
    Ok(())
}
