//! MAPF problem model: grid map, agents, paths, solutions, and the conflict
//! semantics used as the universal feasibility oracle.

use std::collections::HashMap;

use thiserror::Error;

use crate::fasthash::FastMap;
use crate::planner::{bfs_distances, DistanceField, UNREACHABLE};

/// Discrete time index into a path.
pub type Timestep = u32;
/// Travel-time cost; sums over thousands of agents, so keep it wide.
pub type Cost = u64;

/// A passable cell of the grid, stored as a row-major index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex(pub u32);

impl Vertex {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A 4-connected grid graph. Vertices are the passable cells; edges connect
/// passable cells at Manhattan distance 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    width: u32,
    height: u32,
    blocked: Vec<bool>,
}

impl GridMap {
    /// `blocked` is row-major with `width * height` entries.
    pub fn new(width: u32, height: u32, blocked: Vec<bool>) -> Self {
        assert!(width > 0 && height > 0, "map dimensions must be positive");
        assert_eq!(
            blocked.len(),
            (width as usize) * (height as usize),
            "blocked vector does not match dimensions"
        );
        GridMap {
            width,
            height,
            blocked,
        }
    }

    /// All-passable map, mostly for tests.
    pub fn open(width: u32, height: u32) -> Self {
        let cells = (width as usize) * (height as usize);
        GridMap::new(width, height, vec![false; cells])
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.blocked.len()
    }

    #[inline]
    pub fn vertex(&self, x: u32, y: u32) -> Vertex {
        debug_assert!(x < self.width && y < self.height);
        Vertex(y * self.width + x)
    }

    #[inline]
    pub fn x(&self, v: Vertex) -> u32 {
        v.0 % self.width
    }

    #[inline]
    pub fn y(&self, v: Vertex) -> u32 {
        v.0 / self.width
    }

    #[inline]
    pub fn in_bounds(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height
    }

    #[inline]
    pub fn is_passable(&self, v: Vertex) -> bool {
        v.index() < self.blocked.len() && !self.blocked[v.index()]
    }

    #[inline]
    pub fn is_passable_xy(&self, x: u32, y: u32) -> bool {
        self.in_bounds(x, y) && !self.blocked[(y * self.width + x) as usize]
    }

    /// Passable 4-neighbors in a fixed order (north, south, west, east), which
    /// downstream search code relies on for determinism.
    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        let x = self.x(v);
        let y = self.y(v);
        [
            (x, y.wrapping_sub(1)),
            (x, y + 1),
            (x.wrapping_sub(1), y),
            (x + 1, y),
        ]
        .into_iter()
        .filter(|&(nx, ny)| self.is_passable_xy(nx, ny))
        .map(|(nx, ny)| self.vertex(nx, ny))
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.neighbors(v).count()
    }

    pub fn passable_vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.blocked.len() as u32)
            .map(Vertex)
            .filter(|&v| self.is_passable(v))
    }

    /// Number of undirected edges, i.e. adjacent passable pairs.
    pub fn edge_count(&self) -> usize {
        self.passable_vertices()
            .map(|v| self.neighbors(v).count())
            .sum::<usize>()
            / 2
    }
}

/// One agent of the instance. `shortest_dist` is the unconstrained graph
/// distance from start to goal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Agent {
    pub id: usize,
    pub start: Vertex,
    pub goal: Vertex,
    pub shortest_dist: Timestep,
}

/// Errors raised while assembling an instance from raw start/goal pairs.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("instance must contain at least one agent")]
    Empty,
    #[error("agent {agent}: {what} cell is blocked or out of bounds")]
    ImpassableEndpoint { agent: usize, what: &'static str },
    #[error("agents {first} and {second} share a start vertex")]
    DuplicateStart { first: usize, second: usize },
    #[error("agents {first} and {second} share a goal vertex")]
    DuplicateGoal { first: usize, second: usize },
    #[error("agent {agent}: goal is unreachable from start")]
    Unreachable { agent: usize },
}

/// A MAPF instance: the map, the agents, and a per-agent distance field to its
/// goal (reused as the planner heuristic). Immutable after construction and
/// freely shareable across threads.
#[derive(Debug, Clone)]
pub struct Instance {
    map: GridMap,
    agents: Vec<Agent>,
    dist_fields: Vec<DistanceField>,
    total_shortest: Cost,
}

impl Instance {
    /// Builds an instance from `(start, goal)` pairs, computing exact shortest
    /// distances by BFS. Starts must be pairwise distinct, as must goals.
    pub fn new(map: GridMap, pairs: &[(Vertex, Vertex)]) -> Result<Instance, InstanceError> {
        if pairs.is_empty() {
            return Err(InstanceError::Empty);
        }
        let mut start_seen: HashMap<Vertex, usize> = HashMap::new();
        let mut goal_seen: HashMap<Vertex, usize> = HashMap::new();
        for (id, &(start, goal)) in pairs.iter().enumerate() {
            if !map.is_passable(start) {
                return Err(InstanceError::ImpassableEndpoint {
                    agent: id,
                    what: "start",
                });
            }
            if !map.is_passable(goal) {
                return Err(InstanceError::ImpassableEndpoint {
                    agent: id,
                    what: "goal",
                });
            }
            if let Some(&first) = start_seen.get(&start) {
                return Err(InstanceError::DuplicateStart { first, second: id });
            }
            if let Some(&first) = goal_seen.get(&goal) {
                return Err(InstanceError::DuplicateGoal { first, second: id });
            }
            start_seen.insert(start, id);
            goal_seen.insert(goal, id);
        }

        let mut agents = Vec::with_capacity(pairs.len());
        let mut dist_fields = Vec::with_capacity(pairs.len());
        let mut total: Cost = 0;
        for (id, &(start, goal)) in pairs.iter().enumerate() {
            let field = bfs_distances(&map, goal);
            let d = field.get(start);
            if d == UNREACHABLE {
                return Err(InstanceError::Unreachable { agent: id });
            }
            total += d as Cost;
            agents.push(Agent {
                id,
                start,
                goal,
                shortest_dist: d,
            });
            dist_fields.push(field);
        }
        Ok(Instance {
            map,
            agents,
            dist_fields,
            total_shortest: total,
        })
    }

    #[inline]
    pub fn map(&self) -> &GridMap {
        &self.map
    }

    #[inline]
    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    #[inline]
    pub fn agent(&self, id: usize) -> &Agent {
        &self.agents[id]
    }

    #[inline]
    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    /// Distance-to-goal field for one agent (exact BFS distances).
    #[inline]
    pub fn dist_field(&self, agent: usize) -> &DistanceField {
        &self.dist_fields[agent]
    }

    /// Sum of all shortest distances; the lower bound on any feasible SOC.
    #[inline]
    pub fn total_shortest_dist(&self) -> Cost {
        self.total_shortest
    }
}

/// A single agent's trajectory: one vertex per timestep, starting at the
/// agent's start and ending at its goal. After the final timestep the agent is
/// modeled as parked at its goal forever.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub agent_id: usize,
    pub states: Vec<Vertex>,
}

impl Path {
    pub fn new(agent_id: usize, states: Vec<Vertex>) -> Self {
        debug_assert!(!states.is_empty());
        Path { agent_id, states }
    }

    /// Travel time: number of timesteps after the first state.
    #[inline]
    pub fn cost(&self) -> Cost {
        (self.states.len() - 1) as Cost
    }

    /// Timestep of the final state.
    #[inline]
    pub fn end_time(&self) -> Timestep {
        (self.states.len() - 1) as Timestep
    }

    /// Position at `t`, with the goal-parked extension beyond the path end.
    #[inline]
    pub fn at(&self, t: Timestep) -> Vertex {
        let idx = (t as usize).min(self.states.len() - 1);
        self.states[idx]
    }
}

/// A full solution: one path per agent and the cached sum of costs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    paths: Vec<Path>,
    soc: Cost,
}

impl Solution {
    /// `paths` must contain exactly one path per agent id `0..k`, in any order.
    pub fn new(mut paths: Vec<Path>) -> Self {
        paths.sort_by_key(|p| p.agent_id);
        for (i, p) in paths.iter().enumerate() {
            assert_eq!(p.agent_id, i, "missing or duplicate path for agent {i}");
        }
        let soc = paths.iter().map(Path::cost).sum();
        Solution { paths, soc }
    }

    #[inline]
    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    #[inline]
    pub fn path(&self, agent: usize) -> &Path {
        &self.paths[agent]
    }

    #[inline]
    pub fn num_agents(&self) -> usize {
        self.paths.len()
    }

    /// Cached sum of costs.
    #[inline]
    pub fn soc(&self) -> Cost {
        self.soc
    }

    /// Latest path end time over all agents.
    pub fn makespan(&self) -> Timestep {
        self.paths.iter().map(Path::end_time).max().unwrap_or(0)
    }

    /// Splices replacement paths in, keeping the SOC cache coherent.
    pub fn replace_paths(&mut self, new_paths: Vec<Path>) {
        for p in new_paths {
            let slot = &mut self.paths[p.agent_id];
            self.soc = self.soc - slot.cost() + p.cost();
            *slot = p;
        }
    }

    /// Recomputes the SOC from scratch; used to check cache coherence.
    pub fn recompute_soc(&self) -> Cost {
        self.paths.iter().map(Path::cost).sum()
    }
}

/// Sum of costs of a solution.
pub fn soc(solution: &Solution) -> Cost {
    solution.soc()
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("agent {agent}: path cost {cost} is below its shortest distance {shortest}")]
pub struct DelayViolation {
    pub agent: usize,
    pub cost: Cost,
    pub shortest: Timestep,
}

/// Total delay: `sum_i (c(p_i) - d_i)`. Errors if any path undercuts its
/// shortest distance, which signals a planner or distance bug.
pub fn sum_of_delays(instance: &Instance, solution: &Solution) -> Result<Cost, DelayViolation> {
    let mut total: Cost = 0;
    for agent in instance.agents() {
        let cost = solution.path(agent.id).cost();
        let d = agent.shortest_dist as Cost;
        if cost < d {
            return Err(DelayViolation {
                agent: agent.id,
                cost,
                shortest: agent.shortest_dist,
            });
        }
        total += cost - d;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConflictKind {
    Vertex,
    Edge,
}

/// One collision between two agents. For edge conflicts the recorded timestep
/// is the arrival time of the swap and the location is the cell the
/// lower-indexed agent moves into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conflict {
    pub kind: ConflictKind,
    pub agents: (usize, usize),
    pub timestep: Timestep,
    pub location: Vertex,
}

/// A structural defect of a single path, reported separately from conflicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuralViolation {
    WrongStart { agent: usize },
    WrongGoal { agent: usize },
    IllegalStep { agent: usize, timestep: Timestep },
    BlockedCell { agent: usize, timestep: Timestep },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConflictReport {
    pub conflicts: Vec<Conflict>,
    pub structural: Vec<StructuralViolation>,
}

impl ConflictReport {
    pub fn is_feasible(&self) -> bool {
        self.conflicts.is_empty() && self.structural.is_empty()
    }
}

/// Checks a solution for vertex and edge (swap) conflicts, including against
/// agents parked at their goals beyond their path end, plus structural path
/// validity. The report is empty iff the solution is feasible.
pub fn validate_solution(instance: &Instance, solution: &Solution) -> ConflictReport {
    let mut report = ConflictReport::default();
    let map = instance.map();

    for agent in instance.agents() {
        let path = solution.path(agent.id);
        if path.states.first() != Some(&agent.start) {
            report.structural.push(StructuralViolation::WrongStart { agent: agent.id });
        }
        if path.states.last() != Some(&agent.goal) {
            report.structural.push(StructuralViolation::WrongGoal { agent: agent.id });
        }
        for (t, &v) in path.states.iter().enumerate() {
            if !map.is_passable(v) {
                report.structural.push(StructuralViolation::BlockedCell {
                    agent: agent.id,
                    timestep: t as Timestep,
                });
            }
        }
        for (t, pair) in path.states.windows(2).enumerate() {
            let (a, b) = (pair[0], pair[1]);
            let legal_move = a == b
                || (map.x(a).abs_diff(map.x(b)) + map.y(a).abs_diff(map.y(b)) == 1);
            if !legal_move {
                report.structural.push(StructuralViolation::IllegalStep {
                    agent: agent.id,
                    timestep: (t + 1) as Timestep,
                });
            }
        }
    }

    let horizon = solution.makespan();
    let mut occupancy: FastMap<Vertex, Vec<usize>> = FastMap::default();
    let mut moves: FastMap<(Vertex, Vertex), Vec<usize>> = FastMap::default();
    for t in 0..=horizon {
        occupancy.clear();
        for path in solution.paths() {
            let v = path.at(t);
            let occupants = occupancy.entry(v).or_default();
            // Every earlier occupant pairs with this one, so a three-way
            // pile-up reports all three pairs.
            for &other in occupants.iter() {
                report.conflicts.push(Conflict {
                    kind: ConflictKind::Vertex,
                    agents: (other, path.agent_id),
                    timestep: t,
                    location: v,
                });
            }
            occupants.push(path.agent_id);
        }
        if t == horizon {
            break;
        }
        moves.clear();
        for path in solution.paths() {
            let from = path.at(t);
            let to = path.at(t + 1);
            if from == to {
                continue;
            }
            if let Some(opposing) = moves.get(&(to, from)) {
                for &other in opposing {
                    report.conflicts.push(Conflict {
                        kind: ConflictKind::Edge,
                        agents: (other, path.agent_id),
                        timestep: t + 1,
                        // Cell entered by the lower-indexed agent of the pair.
                        location: from,
                    });
                }
            }
            moves.entry((from, to)).or_default().push(path.agent_id);
        }
    }
    report
}
