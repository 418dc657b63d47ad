//! Benchmark runner: ingest a MovingAI map/scenario pair, run the selected
//! engines over a grid of agent counts, and emit one metrics row per run.
//!
//! Exit codes: 0 on success, 2 on parse/configuration errors, 3 when no run
//! produced a solution.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use mapf_lns::{run_benchmark, write_results_csv, write_results_json, Algorithm, BenchConfig,
    BenchError, RunParams};

#[derive(Parser, Debug)]
#[command(name = "mapf-lns", version, about = "Anytime multi-agent path finding benchmarks")]
struct Args {
    /// MovingAI .map file
    #[arg(long)]
    map: PathBuf,

    /// MovingAI .scen file (the first k entries define the k-agent instance)
    #[arg(long)]
    scen: PathBuf,

    /// Agent counts, e.g. 50,100,150
    #[arg(long, value_delimiter = ',', required = true)]
    agents: Vec<usize>,

    /// Engines to run: sequential, drop, sync, deta
    #[arg(long, value_delimiter = ',', default_value = "drop")]
    algo: Vec<Algorithm>,

    /// Wall-clock budget per run, seconds
    #[arg(long, default_value_t = 60.0)]
    time_budget: f64,

    /// Neighborhood size N
    #[arg(long, default_value_t = 16)]
    neighborhood: usize,

    /// Reaction factor for the destroy-heuristic weights
    #[arg(long, default_value_t = 0.01)]
    gamma: f64,

    /// Worker threads m
    #[arg(long, default_value_t = 8)]
    threads: usize,

    /// Master seed; repetition r runs with seed + r
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Repetitions per (algorithm, agent count)
    #[arg(long, default_value_t = 1)]
    reps: u32,

    /// Stop after this many destroy/repair tasks (deterministic runs)
    #[arg(long)]
    iteration_cap: Option<u64>,

    /// Total node-expansion budget per repair (split over the neighborhood)
    #[arg(long)]
    node_budget: Option<u64>,

    /// Results file; .json emits JSON, anything else CSV
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,

    /// Directory for per-run convergence files (one per improvement event)
    #[arg(long)]
    convergence_dir: Option<PathBuf>,

    /// Re-validate every accepted solution during the search
    #[arg(long, default_value_t = false)]
    validate: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();

    let mut params = RunParams::new(args.time_budget, args.seed);
    params.neighborhood_size = args.neighborhood;
    params.gamma = args.gamma;
    params.threads = args.threads;
    params.iteration_cap = args.iteration_cap;
    params.node_budget = args.node_budget;
    params.validate = args.validate;

    if let Some(dir) = &args.convergence_dir {
        if let Err(e) = std::fs::create_dir_all(dir) {
            eprintln!("error: cannot create {}: {e}", dir.display());
            return ExitCode::from(2);
        }
    }

    let config = BenchConfig {
        map_path: args.map,
        scen_path: args.scen,
        agent_counts: args.agents,
        algorithms: args.algo,
        params,
        repetitions: args.reps,
        convergence_dir: args.convergence_dir,
    };

    let rows = match run_benchmark(&config) {
        Ok(rows) => rows,
        Err(e @ (BenchError::Read { .. }
        | BenchError::Parse { .. }
        | BenchError::NotEnoughEntries { .. }
        | BenchError::Ingestion { .. }
        | BenchError::InvalidParams(_))) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    for row in &rows {
        match (row.final_soc, row.suboptimality) {
            (Some(soc), Some(sub)) => eprintln!(
                "{} k={} seed={}: soc {} -> {} (subopt {:.4}, npo {}, {})",
                row.algorithm,
                row.k,
                row.seed,
                row.initial_soc.unwrap_or(0),
                soc,
                sub,
                row.npo_total.unwrap_or(0),
                row.termination,
            ),
            _ => eprintln!(
                "{} k={} seed={}: {}",
                row.algorithm, row.k, row.seed, row.termination
            ),
        }
    }

    let is_json = config_is_json(&args.out);
    let emit = if is_json {
        write_results_json(&rows, &args.out)
    } else {
        write_results_csv(&rows, &args.out)
    };
    if let Err(e) = emit {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    eprintln!("wrote {} rows to {}", rows.len(), args.out.display());

    if rows.iter().all(|r| r.final_soc.is_none()) {
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}

fn config_is_json(path: &std::path::Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}
