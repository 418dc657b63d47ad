//! Barrier-synchronized parallelism: every iteration runs one destroy/repair
//! task per worker from the same snapshot, waits for all of them, installs the
//! minimum-SOC result, and updates exactly one heuristic weight.

use std::thread;
use std::time::Instant;

use crate::destroy::TabuState;
use crate::model::{Cost, Instance, Solution};

use super::{
    build_initial, destroy_and_repair_task, elapsed_secs, RunError, RunParams, RunResult,
    SearchCore, TaskOutcome, TaskReport, Termination,
};

/// Barrier-synchronized parallel LNS. `iteration_cap` counts barrier
/// iterations (each runs `params.threads` tasks).
pub fn run_sync_lns(instance: &Instance, params: &RunParams) -> Result<RunResult, RunError> {
    params.check()?;
    let start = Instant::now();
    let initial = build_initial(instance, params)?;
    Ok(sync_core(instance, params, initial, start))
}

/// As [`run_sync_lns`], starting from a caller-provided feasible solution.
pub fn run_sync_lns_from(
    instance: &Instance,
    params: &RunParams,
    initial: Solution,
) -> Result<RunResult, RunError> {
    params.check()?;
    Ok(sync_core(instance, params, initial, Instant::now()))
}

/// SOC used for winner selection. Successful tasks always beat failures:
/// their SOC is strictly below the shared snapshot, while a non-improving
/// candidate is at least the snapshot and a failed repair has no candidate.
fn selection_soc(report: &TaskReport) -> Cost {
    match &report.outcome {
        TaskOutcome::Improved { solution, .. } => solution.soc(),
        TaskOutcome::Failed { candidate_soc } => candidate_soc.unwrap_or(Cost::MAX),
    }
}

fn sync_core(
    instance: &Instance,
    params: &RunParams,
    initial: Solution,
    start: Instant,
) -> RunResult {
    let mut core = SearchCore::new(instance, params, initial, elapsed_secs(start));
    let m = params.threads;
    let mut tabus: Vec<TabuState> = (0..m).map(|_| TabuState::new(instance.num_agents())).collect();
    let mut serial: u64 = 0;
    let mut iterations: u64 = 0;

    let termination = loop {
        if params.iteration_cap.is_some_and(|cap| iterations >= cap) {
            break Termination::IterationCap;
        }
        if elapsed_secs(start) >= params.time_budget {
            break Termination::Budget;
        }

        let mut reports: Vec<TaskReport> = thread::scope(|scope| {
            let handles: Vec<_> = tabus
                .iter_mut()
                .enumerate()
                .map(|(j, tabu)| {
                    let snapshot = core.snapshot();
                    let task_serial = serial + j as u64;
                    scope.spawn(move || {
                        destroy_and_repair_task(instance, params, snapshot, task_serial, tabu)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker thread panicked"))
                .collect()
        });
        serial += m as u64;
        iterations += 1;

        // Winner: minimum SOC, ties to the lowest worker index. On an all-fail
        // iteration this applies the failure decay to the least-bad worker's
        // heuristic; losing results are discarded but still count toward NPO.
        let winner_idx = (0..reports.len())
            .min_by_key(|&j| (selection_soc(&reports[j]), j))
            .expect("at least one worker");
        let winner = reports.swap_remove(winner_idx);
        core.npo += m as u64 - 1;
        core.apply(winner, elapsed_secs(start));
    };

    let elapsed = elapsed_secs(start);
    core.into_result(params, termination, elapsed)
}
