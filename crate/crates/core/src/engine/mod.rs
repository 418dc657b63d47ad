//! The anytime search engines: a sequential LNS loop plus three parallel
//! schemes built from the same destroy/repair task. All engines share one
//! contract: the best-known solution is always feasible, its SOC only ever
//! decreases, and every improvement is timestamped into an event log.

mod drop_lns;
mod sync_lns;

pub use drop_lns::{run_drop_lns, run_drop_lns_from};
pub use sync_lns::{run_sync_lns, run_sync_lns_from};

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::destroy::{
    agent_based_destroy, map_based_destroy, random_destroy, select_heuristic, DestroyHeuristic,
    HeuristicWeights, TabuState,
};
use crate::model::{validate_solution, Cost, Instance, Path, Solution};
use crate::repair::{pp_repair, random_priority_order, RepairOutcome};

/// Parameters of one engine run.
///
/// `iteration_cap` bounds the number of destroy/repair tasks (for the
/// barrier-synchronized engine: the number of iterations, each of which runs
/// `threads` tasks) and exists mainly for deterministic tests. `node_budget`
/// is the total expansion budget of one repair, split evenly per neighborhood
/// agent; when unset each agent gets the planner default.
#[derive(Debug, Clone)]
pub struct RunParams {
    pub time_budget: f64,
    pub neighborhood_size: usize,
    pub gamma: f64,
    pub threads: usize,
    pub seed: u64,
    pub node_budget: Option<u64>,
    pub queue_capacity: Option<usize>,
    pub iteration_cap: Option<u64>,
    pub restart_limit: u32,
    pub validate: bool,
}

impl RunParams {
    /// Defaults: N = 16, gamma = 0.01, m = 8 worker threads.
    pub fn new(time_budget: f64, seed: u64) -> Self {
        RunParams {
            time_budget,
            neighborhood_size: 16,
            gamma: 0.01,
            threads: 8,
            seed,
            node_budget: None,
            queue_capacity: None,
            iteration_cap: None,
            restart_limit: 50,
            validate: false,
        }
    }

    /// Task-queue capacity; defaults to twice the worker count.
    pub fn effective_queue_capacity(&self) -> usize {
        self.queue_capacity.unwrap_or(2 * self.threads).max(self.threads)
    }

    fn check(&self) -> Result<(), RunError> {
        if !self.time_budget.is_finite() || self.time_budget <= 0.0 {
            return Err(RunError::InvalidParams("time_budget must be positive".into()));
        }
        if self.neighborhood_size < 1 {
            return Err(RunError::InvalidParams("neighborhood_size must be >= 1".into()));
        }
        if self.threads < 1 {
            return Err(RunError::InvalidParams("threads must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(RunError::InvalidParams("gamma must be in [0, 1]".into()));
        }
        if self.restart_limit < 1 {
            return Err(RunError::InvalidParams("restart_limit must be >= 1".into()));
        }
        if let Some(cap) = self.queue_capacity {
            if cap < self.threads {
                return Err(RunError::InvalidParams(
                    "queue_capacity must be >= threads".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("no initial solution found after {attempts} restarts")]
    NoInitialSolution { attempts: u32 },
    #[error("invalid run parameters: {0}")]
    InvalidParams(String),
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Budget,
    IterationCap,
}

/// One accepted improvement (the first entry records the initial solution and
/// carries no task serial).
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementEvent {
    pub time: f64,
    pub soc: Cost,
    pub sum_of_delays: Cost,
    pub task_serial: Option<u64>,
}

/// Timestamped record of a run, from which all evaluation metrics derive.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEventLog {
    pub improvements: Vec<ImprovementEvent>,
    /// Total destroy/repair pairs performed within the budget.
    pub npo_total: u64,
    /// Accepted installs of the best-known solution.
    pub dp: u64,
    /// Integration horizon for the convergence curve.
    pub budget: f64,
    /// Tasks that finished after the deadline and were discarded.
    pub dropped_tasks: u64,
    /// Per-replica NPO counts (detached engine only).
    pub per_thread_npo: Option<Vec<u64>>,
    /// Per-replica final SOCs (detached engine only).
    pub per_thread_final_soc: Option<Vec<Cost>>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_solution: Solution,
    pub event_log: RunEventLog,
    pub initial_soc: Cost,
    pub termination: Termination,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_seed(master: u64, tag: u64, index: u64) -> [u8; 32] {
    let mut state = master ^ tag.rotate_left(32) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    seed
}

const TASK_STREAM: u64 = 0x7461_736b;
const INIT_STREAM: u64 = 0x696e_6974;
const REPLICA_STREAM: u64 = 0x7265_706c;

/// The RNG of one destroy/repair task: a stream derived from the master seed
/// and the task's serial number, independent of thread scheduling.
pub fn task_rng(master_seed: u64, task_serial: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(stream_seed(master_seed, TASK_STREAM, task_serial))
}

fn init_rng(master_seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(stream_seed(master_seed, INIT_STREAM, 0))
}

/// Master seed of one detached replica; replica `j` behaves exactly like a
/// standalone sequential run with this seed.
pub fn deta_replica_seed(master_seed: u64, replica: usize) -> u64 {
    let mut state = master_seed ^ REPLICA_STREAM.rotate_left(32);
    let a = splitmix64(&mut state);
    let mut state = a ^ (replica as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    splitmix64(&mut state)
}

/// Private copy of the shared state a task works on.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub solution: Solution,
    pub weights: HeuristicWeights,
    pub soc: Cost,
}

#[derive(Debug, Clone)]
pub enum TaskOutcome {
    /// Repair strictly improved the snapshot; `improvement` is the SOC delta.
    Improved { solution: Solution, improvement: Cost },
    /// Repair failed or did not improve; `candidate_soc` is the non-improving
    /// full-solution SOC when the repair itself succeeded.
    Failed { candidate_soc: Option<Cost> },
}

#[derive(Debug, Clone)]
pub struct TaskReport {
    pub serial: u64,
    pub heuristic: DestroyHeuristic,
    pub outcome: TaskOutcome,
    pub expansions: u64,
}

/// One destroy/repair pair on private copies: select a heuristic from the
/// weight snapshot, build a neighborhood, remove its paths, and replan them
/// with prioritized planning. Failure (no paths, or no strict improvement)
/// is an outcome, not an error.
pub fn destroy_and_repair_task(
    instance: &Instance,
    params: &RunParams,
    snapshot: Snapshot,
    serial: u64,
    tabu: &mut TabuState,
) -> TaskReport {
    let mut rng = task_rng(params.seed, serial);
    tabu.observe_soc(snapshot.soc);
    let heuristic = select_heuristic(&snapshot.weights, &mut rng);
    let n = params.neighborhood_size;
    let neighborhood = match heuristic {
        DestroyHeuristic::Random => random_destroy(instance, n, &mut rng),
        DestroyHeuristic::AgentBased => {
            agent_based_destroy(instance, &snapshot.solution, n, &mut rng, tabu)
        }
        DestroyHeuristic::MapBased => map_based_destroy(instance, &snapshot.solution, n, &mut rng),
    };

    let mut in_neighborhood = vec![false; instance.num_agents()];
    for &a in &neighborhood.agents {
        in_neighborhood[a] = true;
    }
    let destroyed_cost: Cost = neighborhood
        .agents
        .iter()
        .map(|&a| snapshot.solution.path(a).cost())
        .sum();
    let fixed: Vec<&Path> = snapshot
        .solution
        .paths()
        .iter()
        .filter(|p| !in_neighborhood[p.agent_id])
        .collect();
    let order = random_priority_order(&neighborhood.agents, &mut rng);

    match pp_repair(instance, &fixed, &order, params.node_budget) {
        RepairOutcome::Failure { expansions_used } => TaskReport {
            serial,
            heuristic,
            outcome: TaskOutcome::Failed { candidate_soc: None },
            expansions: expansions_used,
        },
        RepairOutcome::Success {
            new_paths,
            expansions_used,
        } => {
            let new_cost: Cost = new_paths.iter().map(Path::cost).sum();
            if new_cost >= destroyed_cost {
                return TaskReport {
                    serial,
                    heuristic,
                    outcome: TaskOutcome::Failed {
                        candidate_soc: Some(snapshot.soc - destroyed_cost + new_cost),
                    },
                    expansions: expansions_used,
                };
            }
            let improvement = destroyed_cost - new_cost;
            let mut solution = snapshot.solution;
            solution.replace_paths(new_paths);
            debug_assert_eq!(solution.soc(), snapshot.soc - improvement);
            TaskReport {
                serial,
                heuristic,
                outcome: TaskOutcome::Improved {
                    solution,
                    improvement,
                },
                expansions: expansions_used,
            }
        }
    }
}

/// The mutable search state every engine drives: best-known solution, weights,
/// and the bookkeeping for the event log. In the asynchronous engine this
/// lives behind the main mutex.
pub(crate) struct SearchCore<'a> {
    instance: &'a Instance,
    validate: bool,
    pub(crate) best: Solution,
    pub(crate) best_soc: Cost,
    pub(crate) weights: HeuristicWeights,
    pub(crate) improvements: Vec<ImprovementEvent>,
    pub(crate) npo: u64,
    pub(crate) dp: u64,
    pub(crate) dropped: u64,
}

impl<'a> SearchCore<'a> {
    pub(crate) fn new(
        instance: &'a Instance,
        params: &RunParams,
        initial: Solution,
        now: f64,
    ) -> Self {
        let soc = initial.soc();
        let mut core = SearchCore {
            instance,
            validate: params.validate,
            best_soc: soc,
            weights: HeuristicWeights::new(params.gamma),
            improvements: Vec::new(),
            npo: 0,
            dp: 0,
            dropped: 0,
            best: initial,
        };
        core.assert_feasible(&core.best);
        core.improvements.push(ImprovementEvent {
            time: now,
            soc,
            sum_of_delays: soc - instance.total_shortest_dist(),
            task_serial: None,
        });
        core
    }

    fn assert_feasible(&self, solution: &Solution) {
        if self.validate || cfg!(debug_assertions) {
            let report = validate_solution(self.instance, solution);
            assert!(
                report.is_feasible(),
                "installed solution is infeasible: {report:?}"
            );
        }
    }

    pub(crate) fn snapshot(&self) -> Snapshot {
        Snapshot {
            solution: self.best.clone(),
            weights: self.weights.clone(),
            soc: self.best_soc,
        }
    }

    /// Applies a finished task: weight update per the success/failure rules,
    /// then compare-and-replace of the best-known solution. The comparison is
    /// always against the current best, never the task's (possibly stale)
    /// snapshot.
    pub(crate) fn apply(&mut self, report: TaskReport, now: f64) {
        self.npo += 1;
        match report.outcome {
            TaskOutcome::Improved {
                solution,
                improvement,
            } => {
                self.weights.update_success(report.heuristic, improvement);
                if solution.soc() < self.best_soc {
                    self.assert_feasible(&solution);
                    self.best_soc = solution.soc();
                    self.improvements.push(ImprovementEvent {
                        time: now,
                        soc: self.best_soc,
                        sum_of_delays: self.best_soc - self.instance.total_shortest_dist(),
                        task_serial: Some(report.serial),
                    });
                    self.dp += 1;
                    self.best = solution;
                }
            }
            TaskOutcome::Failed { .. } => {
                self.weights.update_failure(report.heuristic);
            }
        }
    }

    pub(crate) fn into_result(
        self,
        params: &RunParams,
        termination: Termination,
        elapsed: f64,
    ) -> RunResult {
        let last_event = self.improvements.last().map(|e| e.time).unwrap_or(0.0);
        let budget = match termination {
            Termination::Budget => params.time_budget.max(last_event),
            Termination::IterationCap => elapsed.max(last_event),
        };
        let initial_soc = self.improvements[0].soc;
        RunResult {
            final_solution: self.best,
            initial_soc,
            termination,
            event_log: RunEventLog {
                improvements: self.improvements,
                npo_total: self.npo,
                dp: self.dp,
                budget,
                dropped_tasks: self.dropped,
                per_thread_npo: None,
                per_thread_final_soc: None,
            },
        }
    }
}

pub(crate) fn build_initial(
    instance: &Instance,
    params: &RunParams,
) -> Result<Solution, RunError> {
    let mut rng = init_rng(params.seed);
    crate::repair::initial_solution(instance, &mut rng, params.restart_limit)
        .map_err(|e| RunError::NoInitialSolution { attempts: e.attempts })
}

#[inline]
pub(crate) fn elapsed_secs(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

/// The plain MAPF-LNS loop: select, destroy, repair, accept strict
/// improvements, update weights; until the budget or iteration cap is hit.
pub fn run_sequential_lns(instance: &Instance, params: &RunParams) -> Result<RunResult, RunError> {
    params.check()?;
    let start = Instant::now();
    let initial = build_initial(instance, params)?;
    Ok(sequential_core(instance, params, initial, start))
}

/// Sequential loop starting from a caller-provided feasible solution; the
/// clock starts at the call.
pub fn run_sequential_lns_from(
    instance: &Instance,
    params: &RunParams,
    initial: Solution,
) -> Result<RunResult, RunError> {
    params.check()?;
    Ok(sequential_core(instance, params, initial, Instant::now()))
}

pub(crate) fn sequential_core(
    instance: &Instance,
    params: &RunParams,
    initial: Solution,
    start: Instant,
) -> RunResult {
    let mut core = SearchCore::new(instance, params, initial, elapsed_secs(start));
    let mut tabu = TabuState::new(instance.num_agents());
    let mut serial: u64 = 0;
    let termination = loop {
        if params.iteration_cap.is_some_and(|cap| serial >= cap) {
            break Termination::IterationCap;
        }
        if elapsed_secs(start) >= params.time_budget {
            break Termination::Budget;
        }
        let snapshot = core.snapshot();
        let report = destroy_and_repair_task(instance, params, snapshot, serial, &mut tabu);
        core.apply(report, elapsed_secs(start));
        serial += 1;
    };
    let elapsed = elapsed_secs(start);
    core.into_result(params, termination, elapsed)
}

/// Detached parallelism: `m` independent sequential runs from a shared initial
/// solution with independent seeds and private weights; the minimum-SOC final
/// solution wins. Replicas never exchange solutions.
pub fn run_deta_lns(instance: &Instance, params: &RunParams) -> Result<RunResult, RunError> {
    params.check()?;
    let start = Instant::now();
    let initial = build_initial(instance, params)?;
    Ok(deta_core(instance, params, initial, start))
}

pub fn run_deta_lns_from(
    instance: &Instance,
    params: &RunParams,
    initial: Solution,
) -> Result<RunResult, RunError> {
    params.check()?;
    Ok(deta_core(instance, params, initial, Instant::now()))
}

fn deta_core(
    instance: &Instance,
    params: &RunParams,
    initial: Solution,
    start: Instant,
) -> RunResult {
    let m = params.threads;
    let replica_params: Vec<RunParams> = (0..m)
        .map(|j| {
            let mut p = params.clone();
            p.seed = deta_replica_seed(params.seed, j);
            p
        })
        .collect();

    let mut results: Vec<RunResult> = std::thread::scope(|scope| {
        let handles: Vec<_> = replica_params
            .iter()
            .map(|p| {
                let replica_initial = initial.clone();
                scope.spawn(move || sequential_core(instance, p, replica_initial, start))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("replica thread panicked"))
            .collect()
    });

    let per_thread_npo: Vec<u64> = results.iter().map(|r| r.event_log.npo_total).collect();
    let per_thread_final: Vec<Cost> = results.iter().map(|r| r.final_solution.soc()).collect();
    let npo_total: u64 = per_thread_npo.iter().sum();
    let winner = per_thread_final
        .iter()
        .enumerate()
        .min_by_key(|&(j, &soc)| (soc, j))
        .map(|(j, _)| j)
        .expect("at least one replica");

    let mut result = results.swap_remove(winner);
    result.event_log.npo_total = npo_total;
    result.event_log.per_thread_npo = Some(per_thread_npo);
    result.event_log.per_thread_final_soc = Some(per_thread_final);
    result
}
