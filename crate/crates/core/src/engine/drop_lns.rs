//! Asynchronous destroy/repair parallelism: a main thread keeps a bounded
//! task queue full while worker threads pop tasks, snapshot the shared state,
//! work unlocked, and synchronize results on the fly.
//!
//! Lock discipline: the task mutex guards only the queue; the main mutex
//! guards the best-known solution, the weights, and the event log. No thread
//! ever holds both at once.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use crate::destroy::TabuState;
use crate::model::{Instance, Solution};

use super::{
    build_initial, destroy_and_repair_task, elapsed_secs, RunError, RunParams, RunResult,
    SearchCore, Termination,
};

/// Asynchronous parallel LNS over `params.threads` workers.
pub fn run_drop_lns(instance: &Instance, params: &RunParams) -> Result<RunResult, RunError> {
    params.check()?;
    let start = Instant::now();
    let initial = build_initial(instance, params)?;
    Ok(drop_core(instance, params, initial, start))
}

/// As [`run_drop_lns`], starting from a caller-provided feasible solution.
pub fn run_drop_lns_from(
    instance: &Instance,
    params: &RunParams,
    initial: Solution,
) -> Result<RunResult, RunError> {
    params.check()?;
    Ok(drop_core(instance, params, initial, Instant::now()))
}

fn drop_core(
    instance: &Instance,
    params: &RunParams,
    initial: Solution,
    start: Instant,
) -> RunResult {
    let main = Mutex::new(SearchCore::new(
        instance,
        params,
        initial,
        elapsed_secs(start),
    ));
    let task_queue: Mutex<VecDeque<u64>> = Mutex::new(VecDeque::new());
    let stop = AtomicBool::new(false);
    let completed = AtomicU64::new(0);
    let capacity = params.effective_queue_capacity();
    let cap = params.iteration_cap;
    let deadline = params.time_budget;

    let termination = thread::scope(|scope| {
        let workers: Vec<_> = (0..params.threads)
            .map(|_| {
                scope.spawn(|| {
                    let mut tabu = TabuState::new(instance.num_agents());
                    loop {
                        if stop.load(Ordering::Acquire) {
                            break;
                        }
                        let serial = task_queue.lock().unwrap().pop_front();
                        let Some(serial) = serial else {
                            thread::yield_now();
                            continue;
                        };
                        let snapshot = main.lock().unwrap().snapshot();
                        let report =
                            destroy_and_repair_task(instance, params, snapshot, serial, &mut tabu);
                        {
                            let mut core = main.lock().unwrap();
                            let now = elapsed_secs(start);
                            if now > deadline {
                                // Late finish: suppress both the install and
                                // the weight update.
                                core.dropped += 1;
                            } else {
                                core.apply(report, now);
                            }
                        }
                        completed.fetch_add(1, Ordering::AcqRel);
                    }
                })
            })
            .collect();

        let mut next_serial: u64 = 0;
        let termination = loop {
            if cap.is_some_and(|c| completed.load(Ordering::Acquire) >= c) {
                break Termination::IterationCap;
            }
            if elapsed_secs(start) >= deadline {
                break Termination::Budget;
            }
            {
                let mut queue = task_queue.lock().unwrap();
                while queue.len() < capacity {
                    if cap.is_some_and(|c| next_serial >= c) {
                        break;
                    }
                    queue.push_back(next_serial);
                    next_serial += 1;
                }
            }
            // Poll period stays far below the queue drain time (capacity x
            // per-task cost) so workers never starve, without the main thread
            // eating a saturated machine's cycles.
            thread::sleep(Duration::from_micros(500));
        };

        stop.store(true, Ordering::Release);
        task_queue.lock().unwrap().clear();
        for worker in workers {
            worker.join().expect("worker thread panicked");
        }
        termination
    });

    let elapsed = elapsed_secs(start);
    main.into_inner()
        .unwrap()
        .into_result(params, termination, elapsed)
}
