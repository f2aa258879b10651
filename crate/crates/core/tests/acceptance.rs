//! Acceptance gate. Each criterion runs in isolation and prints one
//! PASS/FAIL line; the process exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seedevo::compress::{
    compress_pending, group_costs, group_messages, reconstruct_context, select_statuses, BudgetConfig, GroupCosts,
    HeadSummarizer, Message, Role, SelectionStatus, WordPunctCounter,
};
use seedevo::engine::{run_evolution, AgentSeed, Engine, Event, StopDecision, StopReason, StoppingState};
use seedevo::executor::{
    single_score, Executor, ExternalExecutor, FnExecutor, RunContext, SimModelParams, SimulatedExecutor,
};
use seedevo::hedge::{enforce_bounds, rank_rewards, UpdateReport};
use seedevo::lineage::{compute_operator_stats, parent_conditioned_win_rate, simulate_tournaments};
use seedevo::workspace::{materialize_seed, CurationRules};
use seedevo::{EngineConfig, HedgeConfig, HedgeState, MetricDirection, ObservedGain, Operator};

const SUM_TOL: f64 = 1e-9;
const BOUND_TOL: f64 = 1e-9;
const REFERENCE_TOL: f64 = 1e-12;
const HEDGE_BUDGET: Duration = Duration::from_secs(5);
const LINEAGE_BUDGET: Duration = Duration::from_secs(60);

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("1 hedge correctness", hedge_correctness),
        ("2 rank-reward oracle", rank_reward_oracle),
        ("3 bounds projection", bounds_projection),
        ("4 single-slot trace", single_slot_trace),
        ("5 stopping policy", stopping_policy),
        ("6 determinism and resume", determinism_and_resume),
        ("7 lineage reproduction", lineage_reproduction),
        ("8 compression invariants", compression_invariants),
        ("9 direction duality", direction_duality),
        ("10 external executor", external_executor),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  {name:<26} {secs:>7.2}s  {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<26} {secs:>7.2}s  {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- 1

fn random_hedge_config(rng: &mut ChaCha8Rng) -> HedgeConfig {
    loop {
        let mut ops = Operator::ALL.to_vec();
        let n = rng.random_range(2..=ops.len());
        let (active, _) = ops.partial_shuffle(rng, n);
        let raw: Vec<f64> = active.iter().map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut cfg = HedgeConfig {
            base_probs: Operator::ALL.iter().map(|&k| (k, 0.0)).collect(),
            floors: BTreeMap::new(),
            ceilings: BTreeMap::new(),
            eta: rng.random_range(0.01..1.0),
            kappa: rng.random_range(1.0..10.0),
            max_bound_iterations: 10,
        };
        for (&k, r) in active.iter().zip(&raw) {
            cfg.base_probs.insert(k, r / total);
            if rng.random_bool(0.7) {
                cfg.floors.insert(k, rng.random_range(0.0..0.9 / n as f64));
            }
            if rng.random_bool(0.3) {
                let lo = cfg.floors.get(&k).copied().unwrap_or(0.0).max(1.0 / n as f64);
                cfg.ceilings.insert(k, rng.random_range(lo..=1.0));
            }
        }
        let sum: f64 = cfg.base_probs.values().sum();
        if (sum - 1.0).abs() > 1e-12 {
            continue;
        }
        if cfg.validate().is_ok() {
            return cfg;
        }
    }
}

fn check_bounds(state: &HedgeState) -> Result<(), String> {
    let cfg = state.config();
    let probs = state.sampling_probabilities();
    let sum: f64 = probs.values().sum();
    ensure((sum - 1.0).abs() <= SUM_TOL, || format!("probabilities sum to {sum}"))?;
    for (k, &p) in &probs {
        let f = cfg.floors.get(k).copied().unwrap_or(0.0);
        let c = cfg.ceilings.get(k).copied().unwrap_or(1.0);
        ensure(p >= f - BOUND_TOL && p <= c + BOUND_TOL, || format!("{k} = {p} outside [{f}, {c}]"))?;
    }
    Ok(())
}

fn hedge_correctness() -> Result<String, String> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut applied, mut skipped) = (0, 0);
    for case in 0..1000 {
        let cfg = random_hedge_config(&mut rng);
        let mut state = HedgeState::new(cfg.clone()).map_err(|e| e.to_string())?;
        let active: Vec<Operator> = state.active_tasks().collect();
        for _ in 0..5 {
            let k = rng.random_range(0..=active.len());
            let gains: Vec<ObservedGain> = active
                .choose_multiple(&mut rng, k)
                .flat_map(|&op| {
                    let reps = rng.random_range(1..4);
                    (0..reps).map(|_| ObservedGain::new(op, rng.random_range(-0.1..0.1))).collect::<Vec<_>>()
                })
                .collect();
            let before: Vec<u64> = state.log_weights().values().map(|w| w.to_bits()).collect();
            let probs_before: Vec<u64> = state.sampling_probabilities().values().map(|p| p.to_bits()).collect();
            match state.apply_update(&gains).map_err(|e| e.to_string())? {
                UpdateReport::Skipped { observed } => {
                    skipped += 1;
                    ensure(observed < 2 && k < 2, || format!("case {case}: skipped with {observed} observed"))?;
                    let after: Vec<u64> = state.log_weights().values().map(|w| w.to_bits()).collect();
                    let probs_after: Vec<u64> = state.sampling_probabilities().values().map(|p| p.to_bits()).collect();
                    ensure(before == after && probs_before == probs_after, || format!("case {case}: skip changed state"))?;
                }
                UpdateReport::Applied { scaled, .. } => {
                    applied += 1;
                    ensure(k >= 2, || format!("case {case}: applied with {k} observed"))?;
                    for (op, r) in &scaled {
                        ensure(r.abs() <= cfg.kappa, || format!("case {case}: |r~| for {op} is {r} > {}", cfg.kappa))?;
                    }
                }
            }
            check_bounds(&state).map_err(|e| format!("case {case}: {e}"))?;
        }
    }
    let elapsed = started.elapsed();
    ensure(elapsed < HEDGE_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("1000 configs, {applied} updates, {skipped} skips"))
}

// ---------------------------------------------------------------- 2

fn brute_force_ranks(means: &[(Operator, f64)]) -> BTreeMap<Operator, f64> {
    let n = means.len();
    means
        .iter()
        .map(|&(k, m)| {
            let below = means
                .iter()
                .filter(|&&(j, mj)| mj < m || (mj == m && j.name() < k.name()))
                .count();
            (k, 2.0 * below as f64 / (n as f64 - 1.0) - 1.0)
        })
        .collect()
}

fn rank_reward_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut cases = 0;
    for size in 2..=6 {
        for trial in 0..400 {
            let ops: Vec<Operator> = Operator::ALL.choose_multiple(&mut rng, size).copied().collect();
            let means: Vec<(Operator, f64)> = ops
                .iter()
                .map(|&k| {
                    // every third trial draws from a tiny set to force ties
                    let m = if trial % 3 == 0 { [-0.01, 0.0, 0.01][rng.random_range(0..3)] } else { rng.random_range(-1.0..1.0) };
                    (k, m)
                })
                .collect();
            let expected = brute_force_ranks(&means);
            let got = rank_rewards(&means.iter().copied().collect()).ok_or("unexpected skip")?;
            ensure(got == expected, || format!("{means:?}: {got:?} != {expected:?}"))?;
            cases += 1;
        }
    }
    for means in [BTreeMap::new(), [(Operator::Merge, 0.3)].into_iter().collect()] {
        ensure(rank_rewards(&means).is_none(), || "fewer than two operators must skip".into())?;
    }
    Ok(format!("{cases} cases exact"))
}

// ---------------------------------------------------------------- 3

/// Two-pass projection written against plain arrays.
fn reference_bounds(p: &mut [f64; 5], lo: &[f64; 5], hi: &[f64; 5], max_rounds: u32) -> u32 {
    let mut round = 0;
    while round < max_rounds {
        round += 1;
        let snapshot = *p;

        let mut excess = 0.0;
        let mut capped = [false; 5];
        for i in 0..5 {
            if p[i] > hi[i] {
                excess += p[i] - hi[i];
                p[i] = hi[i];
                capped[i] = true;
            }
        }
        if excess > 0.0 {
            let recipients: Vec<usize> = (0..5).filter(|&i| !capped[i] && p[i] < hi[i]).collect();
            let mass: f64 = recipients.iter().map(|&i| p[i]).sum();
            for &i in &recipients {
                p[i] += if mass > 0.0 { excess * p[i] / mass } else { excess / recipients.len() as f64 };
            }
        }

        let mut deficit = 0.0;
        for i in 0..5 {
            if p[i] < lo[i] {
                deficit += lo[i] - p[i];
                p[i] = lo[i];
            }
        }
        if deficit > 0.0 {
            let surplus: Vec<f64> = (0..5).map(|i| (p[i] - lo[i]).max(0.0)).collect();
            let total: f64 = surplus.iter().sum();
            if total > 0.0 {
                for i in 0..5 {
                    p[i] = (p[i] - deficit * surplus[i] / total).max(lo[i]);
                }
            }
        }

        if *p == snapshot {
            break;
        }
    }
    let s: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v /= s;
    }
    round
}

fn bounds_projection() -> Result<String, String> {
    use Operator::*;
    // active tasks of the reference configuration, in name order
    let ops = [Ablation, Continue, Eda, Initial, Merge];
    let lo = [0.05, 0.10, 0.05, 0.05, 0.05];
    let hi = [1.0, 1.0, 1.0, 1.0, 0.30];
    let cfg = HedgeConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_rounds = 0;
    let mut worst_diff: f64 = 0.0;
    for case in 0..1000 {
        // uniform on the simplex via normalized exponentials, with some exact zeros
        let mut x = [0.0; 5];
        for v in x.iter_mut() {
            *v = if rng.random_bool(0.1) { 0.0 } else { -rng.random::<f64>().ln() };
        }
        if x.iter().all(|&v| v == 0.0) {
            x[2] = 1.0;
        }
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= s);

        let probs: BTreeMap<Operator, f64> = ops.iter().copied().zip(x).collect();
        let got = enforce_bounds(&probs, &cfg.floors, &cfg.ceilings, 10).map_err(|e| e.to_string())?;
        let mut want = x;
        let want_rounds = reference_bounds(&mut want, &lo, &hi, 10);
        ensure(got.stable && got.rounds <= 10, || format!("case {case}: not stable within 10 rounds"))?;
        ensure(got.rounds == want_rounds, || format!("case {case}: rounds {} vs {want_rounds}", got.rounds))?;
        worst_rounds = worst_rounds.max(got.rounds);
        for (i, k) in ops.iter().enumerate() {
            let d = (got.probs[k] - want[i]).abs();
            worst_diff = worst_diff.max(d);
            ensure(d <= REFERENCE_TOL, || format!("case {case}: {k} {} vs {}", got.probs[k], want[i]))?;
            ensure(want[i] >= lo[i] - BOUND_TOL && want[i] <= hi[i] + BOUND_TOL, || format!("case {case}: {k} out of bounds"))?;
        }
    }
    Ok(format!("1000 points, max rounds {worst_rounds}, max diff {worst_diff:.1e}"))
}

// ---------------------------------------------------------------- 4

fn single_slot_trace() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut hedge = HedgeConfig::default();
    hedge.base_probs.insert(Operator::Merge, 0.0);
    hedge.base_probs.insert(Operator::Eda, 0.6);
    let config = EngineConfig { population: 1, max_iterations: 3, hedge, master_seed: 4, ..EngineConfig::default() };
    let scores = [0.50, 0.60, 0.55];
    let exec = FnExecutor(move |seed: &AgentSeed, _: &RunContext<'_>| single_score(scores[seed.iteration as usize - 1]));
    let mut engine = Engine::new(config.clone(), exec, dir.path().join("run")).map_err(|e| e.to_string())?;
    let initial_weights = engine.hedge().log_weights().clone();

    // Hand trace:
    // t=1  install 0.50                     best 0.50  stagnation 0  continue
    // t=2  child 0.60 vs 0.50, delta +0.10  wins       best 0.60  stagnation 0  continue
    // t=3  child 0.55 vs 0.60, delta -0.05  loses      best 0.60  stagnation 1  stop: budget
    // One operator observed per iteration, so every Hedge update is skipped.
    let expect = [
        (Some(0.50), None, true, 0, StopDecision::Continue),
        (Some(0.60), Some(0.60 - 0.50), true, 0, StopDecision::Continue),
        (Some(0.60), Some(0.55 - 0.60), false, 1, StopDecision::Stop(StopReason::Budget)),
    ];
    for (t, (elite, delta, won, stagnation, decision)) in expect.into_iter().enumerate() {
        let summary = engine.step().map_err(|e| e.to_string())?;
        ensure(engine.pool().entries[0].score == elite, || format!("t={}: elite {:?}", t + 1, engine.pool().entries[0].score))?;
        ensure(summary.stagnation_count == stagnation, || format!("t={}: stagnation {}", t + 1, summary.stagnation_count))?;
        ensure(summary.decision == decision, || format!("t={}: decision {:?}", t + 1, summary.decision))?;
        ensure(engine.hedge().log_weights() == &initial_weights, || format!("t={}: hedge moved", t + 1))?;
        let events = seedevo::engine::read_events(&engine.store().events_path()).map_err(|e| e.to_string())?;
        let record = events
            .iter()
            .rev()
            .find_map(|e| match e {
                Ok(Event::Tournament(r)) => Some(r.clone()),
                _ => None,
            })
            .ok_or("no tournament record")?;
        ensure(record.delta == delta && record.child_won == won, || format!("t={}: record {record:?}", t + 1))?;
    }
    ensure(engine.pool().entries[0].id() == Some("it0002-slot00"), || "elite should be the t=2 child".into())?;
    Ok("3 iterations match".into())
}

// ---------------------------------------------------------------- 5

fn stop_at(seq: &[f64], direction: MetricDirection) -> (u32, StopReason) {
    let mut s = StoppingState::new(0.0, 5, 30);
    for t in 1..=30u32 {
        let best = seq.get(t as usize - 1).copied().unwrap_or(*seq.last().unwrap());
        if let StopDecision::Stop(r) = s.update(t, Some(best), direction) {
            return (t, r);
        }
    }
    unreachable!("cap of 30 always stops")
}

fn stopping_policy() -> Result<String, String> {
    use StopReason::*;
    let up = MetricDirection::HIGHER;
    let down = MetricDirection::LOWER;
    let mut cases: Vec<(Vec<f64>, MetricDirection, (u32, StopReason))> = Vec::new();

    // improve for k iterations, then flat: converges at k + 5 unless the cap comes first
    for k in 1..=30u32 {
        let seq: Vec<f64> = (0..30).map(|i| (i.min(k - 1)) as f64).collect();
        let want = if k + 5 <= 30 { (k + 5, Converged) } else { (30, Budget) };
        cases.push((seq, up, want));
    }
    // all flat, all worsening
    cases.push((vec![0.7; 30], up, (6, Converged)));
    cases.push(((0..30).map(|i| 1.0 - i as f64 / 100.0).collect(), up, (6, Converged)));
    // always improving
    cases.push(((0..30).map(|i| i as f64).collect(), up, (30, Budget)));
    cases.push(((0..30).map(|i| -(i as f64)).collect(), down, (30, Budget)));
    // an improvement every 5th iteration resets the count just in time
    cases.push(((0..30).map(|i| (i / 5) as f64).collect(), up, (30, Budget)));
    // every 6th is one too late: 1 improves, 2..6 flat
    cases.push(((0..30).map(|i| (i / 6) as f64).collect(), up, (6, Converged)));
    // flat runs of 4 then a run of 5 starting after iteration 11
    let mut seq = vec![1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 3.0];
    seq.extend([3.0; 19]);
    cases.push((seq, up, (16, Converged)));
    // lower is better: decreasing is improvement, increasing is not
    cases.push((vec![0.9, 0.8, 0.7, 0.7, 0.7, 0.7, 0.7, 0.7], down, (8, Converged)));
    cases.push((vec![0.9, 0.95, 1.0, 1.1, 1.2, 1.3], down, (6, Converged)));
    cases.push(((0..30).map(|i| 1.0 + i as f64).collect(), down, (6, Converged)));
    // a tiny improvement counts at threshold 0; equality does not
    cases.push((vec![0.5, 0.5 + 1e-12, 0.5 + 2e-12, 0.5 + 2e-12], up, (8, Converged)));
    cases.push((vec![0.5, 0.5, 0.5, 0.5, 0.5 + 1e-15, 0.5 + 1e-15], up, (10, Converged)));
    // a dip and recovery to the same value is not an improvement
    cases.push((vec![0.5, 0.6, 0.4, 0.6, 0.6, 0.6, 0.6], up, (7, Converged)));
    // improvements at 1, 4, 8, 12, ..., 28 then flat: each gap is below patience
    cases.push(((0..30u32).map(|i| [0, 3, 7, 11, 15, 19, 23, 27].iter().filter(|&&b| i >= b).count() as f64).collect(), up, (30, Budget)));
    // last improvement at 26: stagnation reaches 4 at the cap
    cases.push(((0..30u32).map(|i| i.min(25) as f64).collect(), up, (30, Budget)));
    // last improvement at 25: converges exactly at the cap, convergence wins
    cases.push(((0..30u32).map(|i| i.min(24) as f64).collect(), up, (30, Converged)));
    // improvement arriving on the fifth stagnant iteration is too late
    cases.push((vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0], up, (6, Converged)));
    // and on the fourth it resets
    cases.push((vec![1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0], up, (11, Converged)));
    cases.push((vec![-3.0, -2.0, -1.0], up, (8, Converged)));
    cases.push((vec![-3.0, -2.0, -1.0], down, (6, Converged)));
    cases.push((vec![0.0, f64::MIN_POSITIVE], up, (7, Converged)));
    cases.push((vec![1e9, 1e9 + 1.0, 1e9 + 2.0, 1e9 + 3.0, 1e9 + 4.0], up, (10, Converged)));
    cases.push((vec![0.3, 0.2, 0.1], down, (8, Converged)));

    ensure(cases.len() >= 50, || format!("{} cases constructed", cases.len()))?;
    for (i, (seq, dir, want)) in cases.iter().enumerate() {
        let got = stop_at(seq, *dir);
        ensure(got == *want, || format!("case {i} {seq:?}: got {got:?}, want {want:?}"))?;
    }
    Ok(format!("{} sequences", cases.len()))
}

// ---------------------------------------------------------------- 6

fn sim_config(seed: u64, iterations: u32) -> EngineConfig {
    EngineConfig { master_seed: seed, max_iterations: iterations, patience: iterations, ..EngineConfig::default() }
}

fn sim() -> SimulatedExecutor {
    SimulatedExecutor::new(SimModelParams::default())
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn determinism_and_resume() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = sim_config(6, 10);
    let run = |name: &str, cfg: EngineConfig| -> Result<Vec<u8>, String> {
        let root = dir.path().join(name);
        Engine::new(cfg, sim(), &root).and_then(|mut e| e.run()).map_err(|e| e.to_string())?;
        Ok(read(&root.join("events.jsonl")))
    };
    let reference = run("a", cfg.clone())?;
    ensure(run("b", cfg.clone())? == reference, || "repeat run differs".into())?;
    ensure(run("c", EngineConfig { workers: 1, ..cfg.clone() })? == reference, || "1 worker differs".into())?;
    ensure(run("d", EngineConfig { workers: 8, ..cfg.clone() })? == reference, || "8 workers differ".into())?;

    for boundary in 0..10u32 {
        let root = dir.path().join(format!("split-{boundary}"));
        {
            let mut engine = Engine::new(cfg.clone(), sim(), &root).map_err(|e| e.to_string())?;
            for _ in 0..boundary {
                engine.step().map_err(|e| e.to_string())?;
            }
        }
        // leftovers of a crash part way through the next iteration
        let next = boundary + 1;
        std::fs::create_dir_all(root.join(format!("workspaces/it{next:04}-slot00/junk"))).map_err(|e| e.to_string())?;
        let mut log = std::fs::OpenOptions::new().append(true).open(root.join("events.jsonl")).map_err(|e| e.to_string())?;
        std::io::Write::write_all(&mut log, b"{\"type\":\"tournament\",\"iter").map_err(|e| e.to_string())?;

        let mut engine = Engine::resume(cfg.clone(), sim(), &root).map_err(|e| e.to_string())?;
        ensure(engine.iteration() == boundary, || format!("resumed at {}", engine.iteration()))?;
        engine.run().map_err(|e| e.to_string())?;
        ensure(read(&root.join("events.jsonl")) == reference, || format!("split after {boundary} differs"))?;
    }
    Ok(format!("4 full runs + 10 resume splits identical ({} bytes)", reference.len()))
}

// ---------------------------------------------------------------- 7

fn lineage_reproduction() -> Result<String, String> {
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = EngineConfig { master_seed: 7, ..EngineConfig::default() };
    let log = simulate_tournaments(&cfg, &SimModelParams::default(), 1000, dir.path()).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let n = log.contested().count();
    ensure(n >= 1000, || format!("only {n} tournaments"))?;
    let (stats, _) = compute_operator_stats(&log);
    let initial = stats.iter().find(|s| s.operator == Operator::Initial).ok_or("no Initial tournaments")?;
    for s in &stats {
        if s.operator != Operator::Initial {
            ensure(s.win_rate > initial.win_rate, || {
                format!("{} win rate {:.3} not above Initial {:.3}", s.operator, s.win_rate, initial.win_rate)
            })?;
        }
    }
    let pooled = parent_conditioned_win_rate(&stats).ok_or("no parent-conditioned tournaments")?;
    ensure(pooled - initial.win_rate >= 0.20, || format!("gap {:.3}", pooled - initial.win_rate))?;
    ensure(elapsed < LINEAGE_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{n} tournaments, Initial {:.1}% vs pooled {:.1}%",
        100.0 * initial.win_rate,
        100.0 * pooled
    ))
}

// ---------------------------------------------------------------- 8

fn random_text(rng: &mut ChaCha8Rng, max_words: usize) -> String {
    let words = rng.random_range(0..=max_words);
    let mut s = String::new();
    for i in 0..words {
        if i > 0 {
            s.push(' ');
        }
        s += ["alpha", "beta", "x1", "loss", "auc", "fit()", "a.b", "[0.5]", "ok,", "é"][rng.random_range(0..10)];
    }
    s
}

fn random_transcript(rng: &mut ChaCha8Rng) -> Vec<Message> {
    let mut h = vec![Message::new(0, Role::System, random_text(rng, 40))];
    let units = rng.random_range(0..90);
    for _ in 0..units {
        let id = h.len() as u64;
        match rng.random_range(0..10) {
            0..=3 => {
                let args: Vec<(String, String)> =
                    (0..rng.random_range(0..3)).map(|i| (format!("k{i}"), random_text(rng, 150))).collect();
                h.push(Message::tool_call(id, random_text(rng, 30), args));
                for _ in 0..rng.random_range(0..4) {
                    let id = h.len() as u64;
                    h.push(Message::new(id, Role::Tool, random_text(rng, 300)));
                }
            }
            4..=6 => h.push(Message::new(id, Role::Ai, random_text(rng, 80))),
            7 | 8 => h.push(Message::new(id, Role::Human, random_text(rng, 40))),
            _ => h.push(Message::new(id, Role::Tool, random_text(rng, 60))),
        }
    }
    h
}

/// Oldest-first staged walk, levels 0..=3 for original..drop.
fn reference_walk(costs: &[GroupCosts], target: usize, protected: usize, window: usize) -> Vec<u8> {
    let n = costs.len();
    let cost = |g: &GroupCosts, level: u8| -> usize {
        match level {
            0 => g.original,
            1 => g.compressed.unwrap_or(g.original),
            2 => g.truncate,
            _ => 0,
        }
    };
    let pinned = |i: usize| i + protected >= n;
    let mut level = vec![0u8; n];
    for (i, l) in level.iter_mut().enumerate().skip(1) {
        if n - i >= window && !pinned(i) {
            *l = 3;
        }
    }
    let mut total: usize = (0..n).map(|i| cost(&costs[i], level[i])).sum();
    let steps = (1..=3u8).flat_map(|stage| (0..n).map(move |i| (stage, i)));
    for (stage, i) in steps {
        if total <= target {
            break;
        }
        if pinned(i) || level[i] >= stage || (i == 0 && stage == 3) {
            continue;
        }
        let (a, b) = (cost(&costs[i], level[i]), cost(&costs[i], stage));
        if b < a {
            total = total - a + b;
            level[i] = stage;
        }
    }
    level
}

fn compression_invariants() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let counter = WordPunctCounter;
    let (mut over, mut window_hits) = (0, 0);
    for case in 0..500 {
        let mut h = random_transcript(&mut rng);
        let window = rng.random_range(1..=60);
        let protected = if rng.random_bool(0.5) { 5.min(window) } else { rng.random_range(0..=window.min(8)) };
        let total: usize = h.iter().map(|m| m.token_count).sum();
        let target = rng.random_range(0..=total + 10);
        let budget = BudgetConfig {
            target_tokens: target,
            trigger_tokens: target + 1,
            recent_groups_protected: protected,
            window_groups: window,
            batch_size: rng.random_range(1..4),
            ..BudgetConfig::default()
        };
        budget.validate()?;
        // compress a random subset; the rest stays pending
        let cut = rng.random_range(0..=h.len());
        compress_pending(&mut h[..cut], &HeadSummarizer { ratio: rng.random_range(0.05..1.0) }, &budget, &counter);

        let (groups, _) = group_messages(&h);
        let costs = group_costs(&h, &groups, &budget, &counter);
        let sel = select_statuses(&costs, &budget);
        let n = groups.len();

        let reference = reference_walk(&costs, target, protected, window);
        let got: Vec<u8> = sel.statuses.iter().map(|s| *s as u8).collect();
        ensure(got == reference, || format!("case {case}: statuses differ from reference walk"))?;

        ensure(n == 0 || sel.statuses[0] != SelectionStatus::Drop, || format!("case {case}: first group dropped"))?;
        for i in n.saturating_sub(protected)..n {
            ensure(sel.statuses[i] == SelectionStatus::Original, || format!("case {case}: protected group {i} degraded"))?;
        }
        for i in 1..n {
            if n - i >= window && i + protected < n {
                window_hits += 1;
                ensure(sel.statuses[i] == SelectionStatus::Drop, || format!("case {case}: group {i} outside window kept"))?;
            }
        }
        ensure(sel.over_budget || sel.total_tokens <= target, || format!("case {case}: over target without flag"))?;
        if sel.over_budget {
            over += 1;
        }

        let rendered = reconstruct_context(&h, &groups, &sel.statuses, &budget, &counter);
        let rendered_total: usize = rendered.iter().map(|r| r.token_count).sum();
        ensure(rendered_total == sel.total_tokens, || format!("case {case}: render {rendered_total} vs {}", sel.total_tokens))?;
        let mut by_id = BTreeMap::new();
        for r in &rendered {
            by_id.insert(r.id, r.status);
        }
        for (g, &status) in groups.iter().zip(&sel.statuses) {
            for &i in &g.members {
                let seen = by_id.get(&h[i].id).copied();
                let want = (status != SelectionStatus::Drop).then_some(status);
                ensure(seen == want, || format!("case {case}: group {} not atomic", g.index))?;
            }
        }
        for m in &h {
            if let Some(c) = m.compressed_tokens() {
                ensure(c <= m.token_count, || format!("case {case}: cache longer than original"))?;
            }
        }
    }
    Ok(format!("500 transcripts, {over} over budget, {window_hits} window drops"))
}

// ---------------------------------------------------------------- 9

fn direction_duality() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let params = SimModelParams::default();
    let mirrored = params.mirrored();
    let cfg = sim_config(9, 12);
    let (_, a) = run_evolution(cfg.clone(), SimulatedExecutor::new(params), &dir.path().join("up")).map_err(|e| e.to_string())?;
    let lower = EngineConfig { direction: MetricDirection::LOWER, ..cfg };
    let (_, b) = run_evolution(lower, SimulatedExecutor::new(mirrored), &dir.path().join("down")).map_err(|e| e.to_string())?;
    ensure(a.len() == b.len(), || format!("{} vs {} events", a.len(), b.len()))?;
    let neg = |x: Option<f64>| x.map(|v| -v);
    let mut tournaments = 0;
    for (x, y) in a.iter().zip(&b) {
        match (x, y) {
            (Event::Tournament(p), Event::Tournament(q)) => {
                tournaments += 1;
                ensure(
                    p.operator == q.operator
                        && p.child_won == q.child_won
                        && p.delta == q.delta
                        && p.child_score == neg(q.child_score)
                        && p.parent_score == neg(q.parent_score),
                    || format!("tournament differs: {p:?} vs {q:?}"),
                )?;
            }
            (Event::Hedge(p), Event::Hedge(q)) => ensure(p == q, || format!("hedge differs at {}", p.iteration))?,
            (Event::Iteration(p), Event::Iteration(q)) => {
                ensure(p.elite_ids == q.elite_ids && p.decision == q.decision, || format!("iteration {} differs", p.iteration))?
            }
            (Event::RunStarted(_), Event::RunStarted(_)) => {}
            _ => return Err("event kinds diverge".into()),
        }
    }
    Ok(format!("{tournaments} tournaments mirrored"))
}

// ---------------------------------------------------------------- 10

const TWO_RESULTS: &str = r#"
d="$GA_WORKSPACE/Experiments/main_training"
mkdir -p "$d/a" "$d/b"
echo '{"run_name":"a","score":0.70,"metric":"rmse","higher_is_better":false}' > "$d/a/results.json"
echo '{"run_name":"b","score":0.65,"metric":"rmse","higher_is_better":false}' > "$d/b/results.json"
"#;

/// Writes results except for slot 0 of iteration 2.
const SOMETIMES_SILENT: &str = r#"
if grep -q '"iteration": 2,' "$GA_SEED_MANIFEST" && grep -q '"slot": 0,' "$GA_SEED_MANIFEST"; then
  echo "crashed before training" >&2
  exit 1
fi
d="$GA_WORKSPACE/Experiments/main_training/run"
mkdir -p "$d"
echo '{"run_name":"run","score":0.5,"metric":"auc","higher_is_better":true}' > "$d/results.json"
"#;

fn sh(script: &str, direction: MetricDirection) -> ExternalExecutor {
    ExternalExecutor::new(vec!["sh".into(), "-c".into(), script.into()], direction)
}

fn external_executor() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let seed = AgentSeed {
        id: "it0001-slot00".into(),
        iteration: 1,
        slot: 0,
        operator: Operator::Initial,
        parents: vec![],
        context: seedevo::engine::ContextParams::new(5),
    };
    let mut best = Vec::new();
    for (name, direction, script) in [
        ("lower", MetricDirection::LOWER, TWO_RESULTS),
        ("higher", MetricDirection::HIGHER, TWO_RESULTS),
        ("none", MetricDirection::LOWER, "true"),
    ] {
        let ws = materialize_seed(&seed, &dir.path().join(name), None, &CurationRules::default(), None)
            .map_err(|e| e.to_string())?;
        let ctx = RunContext { workspace: &ws.root, manifest: &ws.manifest_path, data: None, rng_seed: 0 };
        let out = sh(script, direction).execute(&seed, &ctx).enforce_verification();
        best.push((out.verified, out.score, out.experiments.len()));
    }
    ensure(best[0] == (true, Some(0.65), 2), || format!("lower-is-better: {:?}", best[0]))?;
    ensure(best[1] == (true, Some(0.70), 2), || format!("higher-is-better: {:?}", best[1]))?;
    ensure(!best[2].0 && best[2].1.is_none(), || format!("no results: {:?}", best[2]))?;

    let mut hedge = HedgeConfig::default();
    hedge.base_probs.insert(Operator::Merge, 0.0);
    hedge.base_probs.insert(Operator::Eda, 0.6);
    let cfg = EngineConfig { population: 2, max_iterations: 2, hedge, master_seed: 10, ..EngineConfig::default() };
    let (_, events) = run_evolution(cfg, sh(SOMETIMES_SILENT, MetricDirection::HIGHER), &dir.path().join("run"))
        .map_err(|e| e.to_string())?;
    let silent = events
        .iter()
        .find_map(|e| match e {
            Event::Tournament(t) if t.iteration == 2 && t.slot == 0 => Some(t.clone()),
            _ => None,
        })
        .ok_or("missing tournament")?;
    ensure(!silent.child_valid && !silent.child_won && silent.delta.is_none(), || format!("{silent:?}"))?;
    ensure(silent.parent_score == Some(0.5), || "incumbent should keep its score".into())?;
    let update = events
        .iter()
        .find_map(|e| match e {
            Event::Hedge(h) if h.iteration == 2 => Some(h.update.clone()),
            _ => None,
        })
        .ok_or("missing hedge snapshot")?;
    ensure(update == Some(UpdateReport::Skipped { observed: 1 }), || format!("hedge update {update:?}"))?;
    Ok("verified best 0.65/0.70, silent child loses with no gain".into())
}
