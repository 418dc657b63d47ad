//! Benchmark driver: runs a grid of (algorithm, agent count, repetition)
//! engine runs over one map/scenario pair and collects one metrics row each.

use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{
    run_deta_lns, run_drop_lns, run_sequential_lns, run_sync_lns, RunError, RunParams, RunResult,
    Termination,
};
use crate::io::{instance_from_entries, parse_map, parse_scen, write_convergence, ParseError};
use crate::metrics::summarize;
use crate::model::{validate_solution, Cost, Instance, InstanceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Sequential,
    Drop,
    Sync,
    Deta,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Sequential,
        Algorithm::Drop,
        Algorithm::Sync,
        Algorithm::Deta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sequential => "sequential",
            Algorithm::Drop => "drop",
            Algorithm::Sync => "sync",
            Algorithm::Deta => "deta",
        }
    }

    pub fn run(self, instance: &Instance, params: &RunParams) -> Result<RunResult, RunError> {
        match self {
            Algorithm::Sequential => run_sequential_lns(instance, params),
            Algorithm::Drop => run_drop_lns(instance, params),
            Algorithm::Sync => run_sync_lns(instance, params),
            Algorithm::Deta => run_deta_lns(instance, params),
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sequential" => Ok(Algorithm::Sequential),
            "drop" => Ok(Algorithm::Drop),
            "sync" => Ok(Algorithm::Sync),
            "deta" => Ok(Algorithm::Deta),
            other => Err(format!(
                "unknown algorithm `{other}` (expected sequential, drop, sync, or deta)"
            )),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub map_path: PathBuf,
    pub scen_path: PathBuf,
    pub agent_counts: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub params: RunParams,
    pub repetitions: u32,
    pub convergence_dir: Option<PathBuf>,
}

/// One benchmark run. Metric fields are absent when the run produced no
/// solution; the `termination` column says why.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ResultRow {
    pub map: String,
    pub scen: String,
    pub algorithm: String,
    pub k: usize,
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub gamma: f64,
    #[serde(rename = "T")]
    pub time_budget: f64,
    pub seed: u64,
    pub initial_soc: Option<Cost>,
    pub final_soc: Option<Cost>,
    pub suboptimality: Option<f64>,
    pub auc: Option<f64>,
    pub npo_total: Option<u64>,
    pub dp: Option<u64>,
    pub exp: Option<f64>,
    pub termination: String,
}

impl ResultRow {
    pub const CSV_HEADER: [&'static str; 17] = [
        "map", "scen", "algorithm", "k", "m", "N", "gamma", "T", "seed", "initial_soc",
        "final_soc", "suboptimality", "auc", "npo_total", "dp", "exp", "termination",
    ];
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error("agent count {k} exceeds the {available} scenario entries")]
    NotEnoughEntries { k: usize, available: usize },
    #[error("instance ingestion failed for k = {k}: {source}")]
    Ingestion { k: usize, source: InstanceError },
    #[error(transparent)]
    InvalidParams(#[from] RunError),
    #[error("failed to write convergence file: {0}")]
    Convergence(#[from] crate::io::EmitError),
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Budget => "budget",
        Termination::IterationCap => "iteration-cap",
    }
}

fn file_stem(path: &std::path::Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Runs the whole grid. Per-run failures (no initial solution) become rows;
/// configuration-level problems abort the batch.
pub fn run_benchmark(config: &BenchConfig) -> Result<Vec<ResultRow>, BenchError> {
    let map_text = std::fs::read_to_string(&config.map_path).map_err(|e| BenchError::Read {
        path: config.map_path.display().to_string(),
        source: e,
    })?;
    let map = parse_map(&map_text).map_err(|e| BenchError::Parse {
        path: config.map_path.display().to_string(),
        source: e,
    })?;
    let scen_text = std::fs::read_to_string(&config.scen_path).map_err(|e| BenchError::Read {
        path: config.scen_path.display().to_string(),
        source: e,
    })?;
    let entries = parse_scen(&scen_text, &map).map_err(|e| BenchError::Parse {
        path: config.scen_path.display().to_string(),
        source: e,
    })?;

    for &k in &config.agent_counts {
        if k == 0 || k > entries.len() {
            return Err(BenchError::NotEnoughEntries {
                k,
                available: entries.len(),
            });
        }
    }

    let map_name = file_stem(&config.map_path);
    let scen_name = file_stem(&config.scen_path);
    let mut rows = Vec::new();
    for &k in &config.agent_counts {
        let instance = instance_from_entries(&map, &entries, k)
            .map_err(|e| BenchError::Ingestion { k, source: e })?;
        for &algorithm in &config.algorithms {
            for rep in 0..config.repetitions {
                let mut params = config.params.clone();
                params.seed = config.params.seed.wrapping_add(rep as u64);
                let mut row = ResultRow {
                    map: map_name.clone(),
                    scen: scen_name.clone(),
                    algorithm: algorithm.name().to_string(),
                    k,
                    m: params.threads,
                    n: params.neighborhood_size,
                    gamma: params.gamma,
                    time_budget: params.time_budget,
                    seed: params.seed,
                    initial_soc: None,
                    final_soc: None,
                    suboptimality: None,
                    auc: None,
                    npo_total: None,
                    dp: None,
                    exp: None,
                    termination: String::new(),
                };
                match algorithm.run(&instance, &params) {
                    Ok(result) => {
                        let report = validate_solution(&instance, &result.final_solution);
                        if !report.is_feasible() {
                            row.termination = "infeasible-result".to_string();
                        } else {
                            match summarize(&instance, &result) {
                                Ok(metrics) => {
                                    row.initial_soc = Some(metrics.initial_soc);
                                    row.final_soc = Some(metrics.final_soc);
                                    row.suboptimality = Some(metrics.suboptimality);
                                    row.auc = Some(metrics.auc);
                                    row.npo_total = Some(metrics.npo_total);
                                    row.dp = Some(metrics.dp);
                                    row.exp = metrics.exp;
                                    row.termination =
                                        termination_name(result.termination).to_string();
                                }
                                Err(e) => row.termination = format!("metrics-error: {e}"),
                            }
                            if let Some(dir) = &config.convergence_dir {
                                let file = dir.join(format!(
                                    "{map_name}-{}-k{k}-rep{rep}.csv",
                                    algorithm.name()
                                ));
                                write_convergence(&result.event_log, &file)?;
                            }
                        }
                    }
                    Err(RunError::NoInitialSolution { .. }) => {
                        row.termination = "no-initial-solution".to_string();
                    }
                    Err(e @ RunError::InvalidParams(_)) => return Err(e.into()),
                }
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn asset(rel: &str) -> PathBuf {
        PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets")).join(rel)
    }

    fn tiny_params(seed: u64) -> RunParams {
        let mut p = RunParams::new(3600.0, seed);
        p.threads = 2;
        p.neighborhood_size = 4;
        p.iteration_cap = Some(20);
        p
    }

    #[test]
    fn single_run_yields_single_row() {
        let config = BenchConfig {
            map_path: asset("maps/random-32-32-10.map"),
            scen_path: asset("scens/random-32-32-10-random-1.scen"),
            agent_counts: vec![8],
            algorithms: vec![Algorithm::Sequential],
            params: tiny_params(1),
            repetitions: 1,
            convergence_dir: None,
        };
        let rows = run_benchmark(&config).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].termination, "iteration-cap");
        assert!(rows[0].final_soc.is_some());
        assert!(rows[0].final_soc <= rows[0].initial_soc);
    }

    #[test]
    fn row_count_is_the_full_product() {
        let config = BenchConfig {
            map_path: asset("maps/random-32-32-10.map"),
            scen_path: asset("scens/random-32-32-10-random-1.scen"),
            agent_counts: vec![4, 6],
            algorithms: vec![Algorithm::Sequential, Algorithm::Deta],
            params: {
                let mut p = tiny_params(2);
                p.iteration_cap = Some(5);
                p.threads = 2;
                p
            },
            repetitions: 3,
            convergence_dir: None,
        };
        let rows = run_benchmark(&config).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 3);
        // Seeds advance per repetition.
        assert_eq!(rows[0].seed + 1, rows[1].seed);
    }

    #[test]
    fn infeasible_initial_becomes_a_row_not_an_abort() {
        // A scenario whose PP construction cannot succeed: head-on corridor.
        let dir = std::env::temp_dir().join("mapf-lns-bench-test");
        std::fs::create_dir_all(&dir).unwrap();
        let map_path = dir.join("corridor.map");
        std::fs::write(&map_path, "type octile\nheight 1\nwidth 5\nmap\n.....\n").unwrap();
        let scen_path = dir.join("corridor.scen");
        std::fs::write(
            &scen_path,
            "version 1\n0\tcorridor.map\t5\t1\t0\t0\t4\t0\t4\n0\tcorridor.map\t5\t1\t4\t0\t0\t0\t4\n",
        )
        .unwrap();
        let mut params = tiny_params(3);
        params.restart_limit = 3;
        let config = BenchConfig {
            map_path,
            scen_path,
            agent_counts: vec![2],
            algorithms: vec![Algorithm::Drop],
            params,
            repetitions: 1,
            convergence_dir: None,
        };
        let rows = run_benchmark(&config).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].termination, "no-initial-solution");
        assert!(rows[0].final_soc.is_none());
        assert!(rows[0].suboptimality.is_none());
    }

    #[test]
    fn oversized_agent_count_is_a_config_error() {
        let config = BenchConfig {
            map_path: asset("maps/random-32-32-10.map"),
            scen_path: asset("scens/random-32-32-10-random-1.scen"),
            agent_counts: vec![100_000],
            algorithms: vec![Algorithm::Sequential],
            params: tiny_params(4),
            repetitions: 1,
            convergence_dir: None,
        };
        assert!(matches!(
            run_benchmark(&config),
            Err(BenchError::NotEnoughEntries { .. })
        ));
    }

    #[test]
    fn emitted_rows_roundtrip_through_csv_and_json() {
        let config = BenchConfig {
            map_path: asset("maps/random-32-32-10.map"),
            scen_path: asset("scens/random-32-32-10-random-1.scen"),
            agent_counts: vec![6],
            algorithms: vec![Algorithm::Sync],
            params: tiny_params(5),
            repetitions: 1,
            convergence_dir: Some(std::env::temp_dir().join("mapf-lns-conv-test")),
        };
        std::fs::create_dir_all(config.convergence_dir.as_ref().unwrap()).unwrap();
        let rows = run_benchmark(&config).unwrap();
        let dir = std::env::temp_dir().join("mapf-lns-emit-test");
        std::fs::create_dir_all(&dir).unwrap();

        let csv_path = dir.join("rows.csv");
        crate::io::write_results_csv(&rows, &csv_path).unwrap();
        let mut reader = csv::Reader::from_path(&csv_path).unwrap();
        assert_eq!(
            reader.headers().unwrap().iter().collect::<Vec<_>>(),
            ResultRow::CSV_HEADER.to_vec()
        );
        let records: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(records.len(), rows.len());
        // Numeric fields re-parse to the exact in-memory values.
        let rec = &records[0];
        assert_eq!(rec[8].parse::<u64>().unwrap(), rows[0].seed);
        assert_eq!(rec[11].parse::<f64>().unwrap(), rows[0].suboptimality.unwrap());
        assert_eq!(rec[12].parse::<f64>().unwrap(), rows[0].auc.unwrap());

        let json_path = dir.join("rows.json");
        crate::io::write_results_json(&rows, &json_path).unwrap();
        let parsed: serde_json::Value =
            serde_json::from_reader(std::fs::File::open(&json_path).unwrap()).unwrap();
        assert_eq!(parsed.as_array().unwrap().len(), rows.len());

        // Convergence file has one line per improvement event plus header.
        let conv = config
            .convergence_dir
            .as_ref()
            .unwrap()
            .join("random-32-32-10-sync-k6-rep0.csv");
        let conv_text = std::fs::read_to_string(conv).unwrap();
        assert!(conv_text.lines().count() >= 2);
    }

    #[test]
    fn header_only_csv_for_zero_rows() {
        let dir = std::env::temp_dir().join("mapf-lns-empty-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("empty.csv");
        crate::io::write_results_csv(&[], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("map,scen,algorithm"));
    }
}
