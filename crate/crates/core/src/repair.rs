//! Prioritized Planning: the repair operator for destroyed neighborhoods and
//! the initial-solution constructor (PP over all agents with random restarts).

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::model::{Instance, Path, Solution};
use crate::planner::{build_reservation, default_node_budget, plan_constrained_path, PlanResult};

/// Result of one repair attempt. On success there is exactly one new path per
/// neighborhood agent.
#[derive(Debug, Clone)]
pub enum RepairOutcome {
    Success {
        new_paths: Vec<Path>,
        expansions_used: u64,
    },
    Failure {
        expansions_used: u64,
    },
}

impl RepairOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, RepairOutcome::Success { .. })
    }
}

/// Uniform random permutation of the neighborhood, driven solely by `rng`.
pub fn random_priority_order<R: Rng>(agents: &[usize], rng: &mut R) -> Vec<usize> {
    assert!(!agents.is_empty(), "neighborhood must be nonempty");
    let mut order = agents.to_vec();
    order.shuffle(rng);
    order
}

/// Plans the agents of `order` one by one, each avoiding all fixed paths and
/// every path planned before it. `node_budget`, when given, is the total
/// expansion budget for the repair, split evenly per agent; otherwise each
/// agent gets the planner default. Any single `no-path` fails the whole
/// repair; `fixed_paths` are never modified.
pub fn pp_repair(
    instance: &Instance,
    fixed_paths: &[&Path],
    order: &[usize],
    node_budget: Option<u64>,
) -> RepairOutcome {
    debug_assert!(!order.is_empty());
    let map = instance.map();
    let horizon_hint = fixed_paths.iter().map(|p| p.end_time()).max().unwrap_or(0);
    let mut table = build_reservation(fixed_paths.iter().copied(), horizon_hint);

    let per_agent = node_budget.map(|b| (b / order.len() as u64).max(1));
    let mut new_paths = Vec::with_capacity(order.len());
    let mut expansions_used = 0;
    for &agent_id in order {
        let agent = instance.agent(agent_id);
        let dist = instance.dist_field(agent_id);
        let budget = per_agent.unwrap_or_else(|| default_node_budget(map, agent.shortest_dist));
        match plan_constrained_path(map, agent_id, agent.start, agent.goal, dist, &table, budget)
        {
            PlanResult::Found { path, expansions } => {
                expansions_used += expansions;
                table.add_path(&path);
                new_paths.push(path);
            }
            other => {
                expansions_used += other.expansions();
                return RepairOutcome::Failure { expansions_used };
            }
        }
    }
    RepairOutcome::Success {
        new_paths,
        expansions_used,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no initial solution found after {attempts} prioritized-planning restarts")]
pub struct NoInitialSolution {
    pub attempts: u32,
}

/// Builds a feasible solution by running PP over all agents with a fresh
/// random priority order per attempt, up to `restart_limit` attempts.
pub fn initial_solution<R: Rng>(
    instance: &Instance,
    rng: &mut R,
    restart_limit: u32,
) -> Result<Solution, NoInitialSolution> {
    let all: Vec<usize> = (0..instance.num_agents()).collect();
    let attempts = restart_limit.max(1);
    for _ in 0..attempts {
        let order = random_priority_order(&all, rng);
        if let RepairOutcome::Success { new_paths, .. } = pp_repair(instance, &[], &order, None) {
            return Ok(Solution::new(new_paths));
        }
    }
    Err(NoInitialSolution { attempts })
}
