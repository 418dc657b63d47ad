//! Acceptance suite: one pass/fail line per criterion, nonzero exit when any
//! criterion fails. Criteria 1 and 2 share one batch of engine runs, as do 5
//! and 6. Timing-sensitive criteria run sequentially by construction (custom
//! main, no test harness).

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use mapf_lns::{
    bfs_distances, compute_auc, compute_exp, deta_replica_seed, instance_gen, parse_map,
    parse_scen, run_deta_lns_from, run_drop_lns, run_sequential_lns, run_sequential_lns_from,
    run_sync_lns_from, serialize_map, task_rng, validate_solution, Algorithm, Cost,
    DestroyHeuristic, GridMap, HeuristicWeights, ImprovementEvent, Instance, ParseError, Path,
    RunEventLog, RunParams, RunResult, Solution, WEIGHT_FLOOR,
};

fn asset(rel: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets")).join(rel)
}

fn fixture_instance(k: usize) -> Instance {
    let map_text = std::fs::read_to_string(asset("maps/random-32-32-10.map")).unwrap();
    let map = parse_map(&map_text).unwrap();
    let scen_text = std::fs::read_to_string(asset("scens/random-32-32-10-random-1.scen")).unwrap();
    let entries = parse_scen(&scen_text, &map).unwrap();
    mapf_lns::io::instance_from_entries(&map, &entries, k).unwrap()
}

fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

fn socs(result: &RunResult) -> Vec<Cost> {
    result.event_log.improvements.iter().map(|e| e.soc).collect()
}

struct FeasibilityBatch {
    results: Vec<(Algorithm, usize, u64, RunResult)>,
}

/// Criterion 1: 10 seeds x k in {50,100} x all four engines at T = 5 s with
/// full validation of every installed solution.
fn criterion_1_feasibility() -> Result<(String, FeasibilityBatch), String> {
    let mut results = Vec::new();
    for &k in &[50usize, 100] {
        let instance = fixture_instance(k);
        for algorithm in Algorithm::ALL {
            for seed in 0..10u64 {
                let mut params = RunParams::new(5.0, 1000 + seed);
                params.threads = 8;
                params.validate = true;
                let result = algorithm
                    .run(&instance, &params)
                    .map_err(|e| format!("{algorithm} k={k} seed={seed}: {e}"))?;
                let report = validate_solution(&instance, &result.final_solution);
                if !report.is_feasible() {
                    return Err(format!(
                        "{algorithm} k={k} seed={seed}: final solution infeasible: {} conflicts",
                        report.conflicts.len()
                    ));
                }
                if result.event_log.improvements.is_empty() {
                    return Err(format!("{algorithm} k={k} seed={seed}: empty event log"));
                }
                results.push((algorithm, k, seed, result));
            }
        }
    }
    let detail = format!(
        "{} runs, every installed solution validated conflict-free",
        results.len()
    );
    Ok((detail, FeasibilityBatch { results }))
}

/// Criterion 2: strictly decreasing SOC sequences and final = min over log.
fn criterion_2_monotonicity(batch: &FeasibilityBatch) -> Result<String, String> {
    for (algorithm, k, seed, result) in &batch.results {
        let s = socs(result);
        if !s.windows(2).all(|w| w[1] < w[0]) {
            return Err(format!("{algorithm} k={k} seed={seed}: SOC not strictly decreasing"));
        }
        let min = *s.iter().min().unwrap();
        if result.final_solution.soc() != min {
            return Err(format!(
                "{algorithm} k={k} seed={seed}: final {} != log min {min}",
                result.final_solution.soc()
            ));
        }
    }
    Ok(format!("{} event logs checked, zero violations", batch.results.len()))
}

/// Criterion 3: asynchronous engine with one worker and a 300-task cap is
/// trace-identical to the sequential engine on 5 random 16x16 instances.
fn criterion_3_sequential_equivalence() -> Result<String, String> {
    for seed in 0..5u64 {
        let map = instance_gen::random_connected_map(16, 16, 0.12, 900 + seed);
        let instance = instance_gen::random_instance(&map, 16, 300 + seed);
        let mut params = RunParams::new(3600.0, 42 + seed);
        params.threads = 1;
        params.neighborhood_size = 6;
        params.iteration_cap = Some(300);
        let drop = run_drop_lns(&instance, &params).map_err(|e| e.to_string())?;
        let seq = run_sequential_lns(&instance, &params).map_err(|e| e.to_string())?;
        if socs(&drop) != socs(&seq) {
            return Err(format!(
                "instance {seed}: traces differ: {:?} vs {:?}",
                socs(&drop),
                socs(&seq)
            ));
        }
        if drop.event_log.npo_total != seq.event_log.npo_total
            || drop.event_log.dp != seq.event_log.dp
        {
            return Err(format!("instance {seed}: npo/dp bookkeeping differs"));
        }
    }
    Ok("5 instances, 300 tasks each: SOC traces bit-identical".into())
}

/// Criterion 4: the detached engine with m = 4 returns exactly the minimum
/// over the four standalone sequential runs with the replica seeds.
fn criterion_4_deta_decomposition() -> Result<String, String> {
    for seed in 0..3u64 {
        let map = instance_gen::random_connected_map(16, 16, 0.1, 700 + seed);
        let instance = instance_gen::random_instance(&map, 14, 500 + seed);
        let mut params = RunParams::new(3600.0, 77 + seed);
        params.threads = 4;
        params.neighborhood_size = 5;
        params.iteration_cap = Some(200);
        let initial = mapf_lns::initial_solution(&instance, &mut task_rng(seed, 0), 50)
            .map_err(|e| e.to_string())?;

        let deta = run_deta_lns_from(&instance, &params, initial.clone())
            .map_err(|e| e.to_string())?;

        let mut standalone = Vec::new();
        for replica in 0..4 {
            let mut p = params.clone();
            p.threads = 1;
            p.seed = deta_replica_seed(params.seed, replica);
            let run = run_sequential_lns_from(&instance, &p, initial.clone())
                .map_err(|e| e.to_string())?;
            standalone.push(run);
        }
        let oracle_min = standalone
            .iter()
            .map(|r| r.final_solution.soc())
            .min()
            .unwrap();
        if deta.final_solution.soc() != oracle_min {
            return Err(format!(
                "seed {seed}: detached min {} != standalone min {oracle_min}",
                deta.final_solution.soc()
            ));
        }
        let per_thread = deta.event_log.per_thread_final_soc.as_ref().unwrap();
        for (j, run) in standalone.iter().enumerate() {
            if per_thread[j] != run.final_solution.soc() {
                return Err(format!(
                    "seed {seed} replica {j}: {} != standalone {} (replicas must not interact)",
                    per_thread[j],
                    run.final_solution.soc()
                ));
            }
        }
        // The winning replica's trajectory matches its standalone re-execution.
        let winner = (0..4).min_by_key(|&j| (per_thread[j], j)).unwrap();
        if socs(&deta) != socs(&standalone[winner]) {
            return Err(format!("seed {seed}: winner trajectory differs from standalone"));
        }
    }
    Ok("3 seeds x 4 replicas: exact min over standalone runs, traces match".into())
}

struct TrendBatch {
    drop_subopt: Vec<f64>,
    seq_subopt: Vec<f64>,
    drop_auc: Vec<f64>,
    seq_auc: Vec<f64>,
    drop_npo: Vec<f64>,
    seq_npo: Vec<f64>,
}

fn trend_runs() -> Result<TrendBatch, String> {
    let instance = fixture_instance(150);
    let mut batch = TrendBatch {
        drop_subopt: vec![],
        seq_subopt: vec![],
        drop_auc: vec![],
        seq_auc: vec![],
        drop_npo: vec![],
        seq_npo: vec![],
    };
    for seed in 0..10u64 {
        for parallel in [false, true] {
            let mut params = RunParams::new(10.0, 2000 + seed);
            params.threads = 8;
            let result = if parallel {
                run_drop_lns(&instance, &params)
            } else {
                run_sequential_lns(&instance, &params)
            }
            .map_err(|e| e.to_string())?;
            let metrics = mapf_lns::summarize(&instance, &result).map_err(|e| e.to_string())?;
            if parallel {
                batch.drop_subopt.push(metrics.suboptimality);
                batch.drop_auc.push(metrics.auc);
                batch.drop_npo.push(metrics.npo_total as f64);
            } else {
                batch.seq_subopt.push(metrics.suboptimality);
                batch.seq_auc.push(metrics.auc);
                batch.seq_npo.push(metrics.npo_total as f64);
            }
        }
    }
    Ok(batch)
}

/// Criterion 5: on k = 150 at T = 10 s over 10 seeds, the asynchronous engine
/// (m = 8) matches or beats sequential on median suboptimality and median AUC.
fn criterion_5_quality_trend(batch: &mut TrendBatch) -> Result<String, String> {
    let drop_sub = median(&mut batch.drop_subopt);
    let seq_sub = median(&mut batch.seq_subopt);
    let drop_auc = median(&mut batch.drop_auc);
    let seq_auc = median(&mut batch.seq_auc);
    let detail = format!(
        "median subopt {drop_sub:.4} vs {seq_sub:.4}; median AUC {drop_auc:.0} vs {seq_auc:.0}"
    );
    if drop_sub > seq_sub {
        return Err(format!("suboptimality regressed: {detail}"));
    }
    if drop_auc > seq_auc {
        return Err(format!("AUC regressed: {detail}"));
    }
    Ok(detail)
}

/// Criterion 6: same runs, median NPO* of the asynchronous engine is at least
/// twice the sequential median.
fn criterion_6_productivity_trend(batch: &mut TrendBatch) -> Result<String, String> {
    let drop_npo = median(&mut batch.drop_npo);
    let seq_npo = median(&mut batch.seq_npo);
    let ratio = drop_npo / seq_npo;
    let detail = format!(
        "median NPO* {drop_npo:.0} vs {seq_npo:.0} (ratio {ratio:.2}, {} cpus)",
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(0)
    );
    if ratio >= 2.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Criterion 7: with every iteration improving, the barrier-synchronized
/// engine measures EXP = 1 - 1/m exactly.
fn criterion_7_sync_exploration_identity() -> Result<String, String> {
    // One agent on a corridor with a wait-padded initial path: every destroy
    // selects that agent, every worker's repair strictly improves, so the one
    // capped iteration improves. NPO* = m, DP = 1.
    let map = GridMap::open(8, 1);
    let pairs = [(map.vertex(0, 0), map.vertex(7, 0))];
    let instance = Instance::new(map.clone(), &pairs).unwrap();
    let degraded = {
        let mut states = vec![map.vertex(0, 0); 7];
        states.extend((0..8).map(|x| map.vertex(x, 0)));
        Solution::new(vec![Path::new(0, states)])
    };
    for m in [2usize, 4] {
        for seed in 0..5u64 {
            let mut params = RunParams::new(3600.0, 4000 + seed);
            params.threads = m;
            params.neighborhood_size = 1;
            params.iteration_cap = Some(1);
            let result = run_sync_lns_from(&instance, &params, degraded.clone())
                .map_err(|e| e.to_string())?;
            if result.event_log.npo_total != m as u64 || result.event_log.dp != 1 {
                return Err(format!(
                    "m={m} seed={seed}: expected NPO*={m}, DP=1; got {} and {}",
                    result.event_log.npo_total, result.event_log.dp
                ));
            }
            let exp = compute_exp(result.event_log.npo_total, result.event_log.dp)
                .map_err(|e| e.to_string())?;
            let expected = 1.0 - 1.0 / m as f64;
            if exp != expected {
                return Err(format!("m={m} seed={seed}: EXP {exp} != {expected}"));
            }
        }
    }
    Ok("EXP = 1 - 1/m exactly for m in {2, 4}, 5 seeds each".into())
}

fn synthetic_log(events: Vec<(f64, Cost)>, budget: f64) -> RunEventLog {
    RunEventLog {
        improvements: events
            .iter()
            .enumerate()
            .map(|(i, &(time, delays))| ImprovementEvent {
                time,
                soc: 10_000 - i as Cost,
                sum_of_delays: delays,
                task_serial: if i == 0 { None } else { Some(i as u64) },
            })
            .collect(),
        npo_total: events.len() as u64,
        dp: events.len() as u64 - 1,
        budget,
        dropped_tasks: 0,
        per_thread_npo: None,
        per_thread_final_soc: None,
    }
}

/// Criterion 8: AUC against a 1 ms Riemann oracle on 100 random logs, and the
/// reported-table EXP consistency check.
fn criterion_8_metrics_oracles() -> Result<String, String> {
    use rand::Rng;
    let mut rng = task_rng(0xae5u64, 0);
    let dt: f64 = 0.001;
    for case in 0..100 {
        let mut t = 0.0f64;
        let mut delays: Cost = rng.gen_range(50..500);
        let mut events = vec![(t, delays)];
        for _ in 0..rng.gen_range(1..15) {
            t += rng.gen_range(0.005..2.0);
            delays = delays.saturating_sub(rng.gen_range(1..40)).max(1);
            events.push((t, delays));
        }
        let budget = t + rng.gen_range(0.0..4.0);
        let log = synthetic_log(events.clone(), budget);
        let exact = compute_auc(&log).map_err(|e| e.to_string())?;

        let mut riemann = 0.0;
        let mut clock = 0.0;
        while clock < budget {
            let mut current = events[0].1;
            for &(et, ed) in &events {
                if et <= clock {
                    current = ed;
                } else {
                    break;
                }
            }
            riemann += current as f64 * dt.min(budget - clock);
            clock += dt;
        }
        let variation: f64 = events
            .windows(2)
            .map(|w| (w[0].1 as f64 - w[1].1 as f64).abs())
            .sum();
        let tol = dt * (variation + events[0].1 as f64) + 1e-6;
        if (exact - riemann).abs() > tol {
            return Err(format!(
                "case {case}: exact {exact} vs riemann {riemann} exceeds tolerance {tol}"
            ));
        }
    }

    let exp = compute_exp(129_200, 135).map_err(|e| e.to_string())?;
    if (exp - 0.9990).abs() > 5e-4 {
        return Err(format!("EXP {exp} not within 5e-4 of 0.9990"));
    }
    if (exp * 100.0).floor() / 100.0 != 0.99 {
        return Err(format!("EXP {exp} inconsistent with the reported 0.99"));
    }
    Ok("100 random logs within one quantization step; table entry reproduced".into())
}

/// Criterion 9: weight-update sequences match an independent fold to exact
/// floating-point equality.
fn criterion_9_weight_arithmetic() -> Result<String, String> {
    use rand::Rng;
    let mut rng = task_rng(0x3e11u64, 0);
    for gamma in [0.01, 0.05, 0.5] {
        let mut weights = HeuristicWeights::new(gamma);
        let mut oracle = [1.0f64; 3];
        for step in 0..2000 {
            let idx = rng.gen_range(0..3usize);
            let h = DestroyHeuristic::ALL[idx];
            if rng.gen_bool(0.5) {
                let improvement: Cost = rng.gen_range(0..100);
                weights.update_success(h, improvement);
                oracle[idx] =
                    (gamma * improvement as f64 + (1.0 - gamma) * oracle[idx]).max(WEIGHT_FLOOR);
            } else {
                weights.update_failure(h);
                oracle[idx] = ((1.0 - gamma) * oracle[idx]).max(WEIGHT_FLOOR);
            }
            for (i, h) in DestroyHeuristic::ALL.into_iter().enumerate() {
                if weights.get(h) != oracle[i] {
                    return Err(format!(
                        "gamma {gamma} step {step}: weight {} != fold {}",
                        weights.get(h),
                        oracle[i]
                    ));
                }
            }
        }
    }
    Ok("3 gammas x 2000 mixed updates: exact equality with the fold".into())
}

/// Criterion 10: fixture round-trips and designated parse errors.
fn criterion_10_parser_roundtrip() -> Result<String, String> {
    let map_text = std::fs::read_to_string(asset("maps/random-32-32-10.map")).unwrap();
    let map = parse_map(&map_text).map_err(|e| e.to_string())?;
    let reparsed = parse_map(&serialize_map(&map)).map_err(|e| e.to_string())?;
    if map != reparsed {
        return Err("map did not survive serialize/re-parse".into());
    }
    let scen_text = std::fs::read_to_string(asset("scens/random-32-32-10-random-1.scen")).unwrap();
    let entries = parse_scen(&scen_text, &map).map_err(|e| e.to_string())?;
    let entries_again = parse_scen(&scen_text, &map).map_err(|e| e.to_string())?;
    if entries != entries_again || entries.len() != 250 {
        return Err("scenario re-parse mismatch".into());
    }
    // Distances recorded in the fixture agree with BFS on the parsed map.
    for (i, e) in entries.iter().take(25).enumerate() {
        let field = bfs_distances(&map, map.vertex(e.goal.0, e.goal.1));
        let d = field.get(map.vertex(e.start.0, e.start.1));
        if (e.optimal_hint - d as f64).abs() > 1e-9 {
            return Err(format!("entry {i}: hint {} != bfs {d}", e.optimal_hint));
        }
    }

    let malformed: [(&str, fn(&ParseError) -> bool); 4] = [
        ("type octile\nheight 2\nwidth 2\nmap\n.x\n..\n", |e| {
            matches!(e, ParseError::UnknownGlyph { line: 5, column: 2, .. })
        }),
        ("type octile\nheight 2\nwidth 2\nmap\n...\n...\n", |e| {
            matches!(e, ParseError::DimensionMismatch { line: 5, .. })
        }),
        ("type octile\nheight 3\nwidth 2\nmap\n..\n..\n", |e| {
            matches!(e, ParseError::TruncatedGrid { .. })
        }),
        ("height 2\nwidth 2\nmap\n..\n..\n", |e| {
            matches!(e, ParseError::MissingHeader { expected: "type", .. })
        }),
    ];
    for (text, check) in malformed {
        match parse_map(text) {
            Err(e) if check(&e) => {}
            other => return Err(format!("malformed fixture gave {other:?}")),
        }
    }
    let bad_scen = "version 1\n0\tm.map\t32\t32\t0\t0\t500\t0\t1.0\n";
    if !matches!(
        parse_scen(bad_scen, &map),
        Err(ParseError::ScenOutOfBounds { entry: 0, .. })
    ) {
        return Err("out-of-bounds scenario entry not rejected".into());
    }
    Ok("fixture round-trip exact; 5 malformed fixtures hit their designated errors".into())
}

fn panic_message(panic: Box<dyn std::any::Any + Send>) -> String {
    panic
        .downcast_ref::<String>()
        .cloned()
        .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
        .map(|m| format!("panicked: {m}"))
        .unwrap_or_else(|| "panicked".into())
}

fn guarded<T>(f: impl FnOnce() -> Result<T, String>) -> Result<T, String> {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| Err(panic_message(p)))
}

fn main() {
    let mut failures = 0u32;
    let mut report = |name: &str, outcome: Result<String, String>| match outcome {
        Ok(detail) => println!("criterion {name}: PASS — {detail}"),
        Err(detail) => {
            failures += 1;
            println!("criterion {name}: FAIL — {detail}");
        }
    };

    // Criteria 1-2 share one batch of runs, as do 5-6.
    match guarded(criterion_1_feasibility) {
        Ok((detail, batch)) => {
            report("1 (feasibility suite)", Ok(detail));
            report("2 (monotonicity)", guarded(|| criterion_2_monotonicity(&batch)));
        }
        Err(detail) => {
            report("1 (feasibility suite)", Err(detail));
            report(
                "2 (monotonicity)",
                Err("skipped: criterion 1 runs unavailable".into()),
            );
        }
    }

    report(
        "3 (sequential-equivalence oracle)",
        guarded(criterion_3_sequential_equivalence),
    );
    report(
        "4 (detached decomposition oracle)",
        guarded(criterion_4_deta_decomposition),
    );

    match guarded(trend_runs) {
        Ok(mut batch) => {
            report("5 (quality trend)", guarded(|| criterion_5_quality_trend(&mut batch)));
            report(
                "6 (productivity trend)",
                guarded(|| criterion_6_productivity_trend(&mut batch)),
            );
        }
        Err(detail) => {
            report("5 (quality trend)", Err(detail.clone()));
            report("6 (productivity trend)", Err(detail));
        }
    }

    report(
        "7 (sync exploration identity)",
        guarded(criterion_7_sync_exploration_identity),
    );
    report("8 (metrics oracles)", guarded(criterion_8_metrics_oracles));
    report(
        "9 (weight-update arithmetic)",
        guarded(criterion_9_weight_arithmetic),
    );
    report("10 (parser round-trip)", guarded(criterion_10_parser_roundtrip));

    if failures > 0 {
        println!("acceptance: {failures} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
