//! Evaluation quantities computed from run event logs: suboptimality ratio,
//! area under the convergence curve, operation counts, solution depth, and
//! the exploration ratio.

use thiserror::Error;

use crate::model::{sum_of_delays, Cost, Instance, Solution};
use crate::engine::{RunEventLog, RunResult};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("suboptimality is undefined: every start equals its goal (sum of shortest distances is 0)")]
    UndefinedSuboptimality,
    #[error("event log is empty; a run always logs its initial solution")]
    EmptyLog,
    #[error("exploration ratio is undefined for zero operations")]
    UndefinedExploration,
    #[error("inconsistent log: {0}")]
    Inconsistent(String),
}

/// Sum of delays divided by the sum of shortest distances.
pub fn suboptimality_ratio(instance: &Instance, solution: &Solution) -> Result<f64, MetricsError> {
    let lower_bound = instance.total_shortest_dist();
    if lower_bound == 0 {
        return Err(MetricsError::UndefinedSuboptimality);
    }
    let delays = sum_of_delays(instance, solution)
        .map_err(|e| MetricsError::Inconsistent(e.to_string()))?;
    Ok(delays as f64 / lower_bound as f64)
}

/// Exact step-function integral of the best-known sum of delays over runtime,
/// with the last step extended to the log's budget.
pub fn compute_auc(log: &RunEventLog) -> Result<f64, MetricsError> {
    if log.improvements.is_empty() {
        return Err(MetricsError::EmptyLog);
    }
    if log.budget + 1e-9 < log.improvements.last().unwrap().time {
        return Err(MetricsError::Inconsistent(
            "budget is earlier than the last event".into(),
        ));
    }
    let mut auc = 0.0;
    for pair in log.improvements.windows(2) {
        auc += pair[0].sum_of_delays as f64 * (pair[1].time - pair[0].time);
    }
    let last = log.improvements.last().unwrap();
    auc += last.sum_of_delays as f64 * (log.budget - last.time);
    Ok(auc)
}

/// Exploration ratio `(NPO* - DP) / NPO*`.
pub fn compute_exp(npo_total: u64, dp: u64) -> Result<f64, MetricsError> {
    if npo_total == 0 {
        return Err(MetricsError::UndefinedExploration);
    }
    if dp > npo_total {
        return Err(MetricsError::Inconsistent(format!(
            "dp {dp} exceeds npo_total {npo_total}"
        )));
    }
    Ok((npo_total - dp) as f64 / npo_total as f64)
}

/// Depth of the final solution: the number of accepted destroy/repair pairs on
/// the lineage from the initial solution to the final best-known one, replayed
/// from the log (the initial entry carries no serial and does not count).
pub fn depth_tracking(log: &RunEventLog) -> u64 {
    log.improvements
        .iter()
        .filter(|e| e.task_serial.is_some())
        .count() as u64
}

/// All per-run metrics in one bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub suboptimality: f64,
    pub auc: f64,
    pub npo_total: u64,
    pub dp: u64,
    pub exp: Option<f64>,
    pub final_soc: Cost,
    pub initial_soc: Cost,
}

pub fn summarize(instance: &Instance, result: &RunResult) -> Result<MetricsSummary, MetricsError> {
    let log = &result.event_log;
    let exp = if log.npo_total > 0 {
        Some(compute_exp(log.npo_total, log.dp)?)
    } else {
        None
    };
    Ok(MetricsSummary {
        suboptimality: suboptimality_ratio(instance, &result.final_solution)?,
        auc: compute_auc(log)?,
        npo_total: log.npo_total,
        dp: log.dp,
        exp,
        final_soc: result.final_solution.soc(),
        initial_soc: result.initial_soc,
    })
}
