//! Anytime multi-agent path finding (MAPF) based on large neighborhood search.
//!
//! The crate provides the MAPF problem model, single-agent space-time planning
//! against reservation tables, prioritized-planning repair, adaptive destroy
//! heuristics, and four anytime search engines: a sequential LNS loop plus
//! three parallel schemes (asynchronous destroy/repair task parallelism,
//! barrier-synchronized iterations, and fully detached replicas). A benchmark
//! layer ingests MovingAI-style `.map`/`.scen` files and emits per-run metric
//! rows for convergence analysis.

pub mod bench;
pub mod destroy;
mod fasthash;
pub mod engine;
pub mod instance_gen;
pub mod io;
pub mod metrics;
pub mod model;
pub mod planner;
pub mod repair;

pub use bench::{run_benchmark, Algorithm, BenchConfig, BenchError, ResultRow};
pub use destroy::{
    agent_based_destroy, map_based_destroy, random_destroy, select_heuristic, DestroyHeuristic,
    HeuristicWeights, Neighborhood, TabuState, WEIGHT_FLOOR,
};
pub use engine::{
    destroy_and_repair_task, deta_replica_seed, run_deta_lns, run_deta_lns_from, run_drop_lns,
    run_drop_lns_from, run_sequential_lns, run_sequential_lns_from, run_sync_lns,
    run_sync_lns_from, task_rng, ImprovementEvent, RunError, RunEventLog, RunParams, RunResult,
    Snapshot, TaskOutcome, TaskReport, Termination,
};
pub use io::{
    parse_map, parse_scen, serialize_map, write_convergence, write_results_csv,
    write_results_json, EmitError, ParseError, ScenarioEntry,
};
pub use metrics::{
    compute_auc, compute_exp, depth_tracking, suboptimality_ratio, summarize, MetricsError,
    MetricsSummary,
};
pub use model::{
    soc, sum_of_delays, validate_solution, Agent, Conflict, ConflictKind, ConflictReport, Cost,
    GridMap, Instance, InstanceError, Path, Solution, StructuralViolation, Timestep, Vertex,
};
pub use planner::{
    bfs_distances, build_reservation, default_node_budget, plan_constrained_path, DistanceField,
    PlanResult, ReservationTable, UNREACHABLE,
};
pub use repair::{initial_solution, pp_repair, random_priority_order, NoInitialSolution, RepairOutcome};
