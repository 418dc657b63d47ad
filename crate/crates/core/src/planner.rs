//! Single-agent shortest-path machinery: unconstrained BFS distance fields and
//! constrained space-time A* against a reservation table of already-planned
//! paths.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use crate::fasthash::FastMap;
use crate::model::{GridMap, Path, Timestep, Vertex};

/// Sentinel distance for cells that cannot reach the goal.
pub const UNREACHABLE: Timestep = Timestep::MAX;

/// Exact unweighted distances from every cell to one goal. Admissible and
/// consistent as an A* heuristic.
#[derive(Debug, Clone)]
pub struct DistanceField {
    goal: Vertex,
    dist: Vec<Timestep>,
}

impl DistanceField {
    #[inline]
    pub fn goal(&self) -> Vertex {
        self.goal
    }

    #[inline]
    pub fn get(&self, v: Vertex) -> Timestep {
        self.dist[v.index()]
    }

    #[inline]
    pub fn reachable(&self, v: Vertex) -> bool {
        self.dist[v.index()] != UNREACHABLE
    }
}

/// Plain BFS from the goal over the passable cells.
pub fn bfs_distances(map: &GridMap, goal: Vertex) -> DistanceField {
    assert!(map.is_passable(goal), "goal must be passable");
    let mut dist = vec![UNREACHABLE; map.cell_count()];
    dist[goal.index()] = 0;
    let mut queue = VecDeque::new();
    queue.push_back(goal);
    while let Some(v) = queue.pop_front() {
        let d = dist[v.index()];
        for n in map.neighbors(v) {
            if dist[n.index()] == UNREACHABLE {
                dist[n.index()] = d + 1;
                queue.push_back(n);
            }
        }
    }
    DistanceField { goal, dist }
}

// Reservation keys are packed into u64s to keep hashing cheap. Vertices fit in
// 24 bits (maps up to ~4k x 4k) and timesteps in 16 bits at the scales this
// engine runs at; both are checked in debug builds.
#[inline]
fn vertex_key(v: Vertex, t: Timestep) -> u64 {
    debug_assert!(v.0 < (1 << 24) && t < (1 << 16));
    ((v.0 as u64) << 16) | t as u64
}

#[inline]
fn edge_key(from: Vertex, to: Vertex, t: Timestep) -> u64 {
    debug_assert!(from.0 < (1 << 24) && to.0 < (1 << 24) && t < (1 << 16));
    ((from.0 as u64) << 40) | ((to.0 as u64) << 16) | t as u64
}

/// Space-time occupancy of a set of already-planned paths: per-timestep vertex
/// occupancy, directed edge traversals, and the permanent goal parking that
/// starts when each path ends.
#[derive(Debug, Clone, Default)]
pub struct ReservationTable {
    vertex_at: FastMap<u64, usize>,
    edge_at: FastMap<u64, usize>,
    parked: FastMap<u32, (Timestep, usize)>,
    last_vertex_use: FastMap<u32, Timestep>,
    horizon: Timestep,
}

impl ReservationTable {
    pub fn new(horizon_hint: Timestep) -> Self {
        ReservationTable {
            horizon: horizon_hint,
            ..Default::default()
        }
    }

    /// Registers every state, edge traversal, and the goal-parking interval of
    /// `path`.
    pub fn add_path(&mut self, path: &Path) {
        let agent = path.agent_id;
        for (t, &v) in path.states.iter().enumerate() {
            let t = t as Timestep;
            self.vertex_at.insert(vertex_key(v, t), agent);
            let last = self.last_vertex_use.entry(v.0).or_insert(t);
            *last = (*last).max(t);
        }
        for (t, pair) in path.states.windows(2).enumerate() {
            if pair[0] != pair[1] {
                self.edge_at
                    .insert(edge_key(pair[0], pair[1], t as Timestep), agent);
            }
        }
        let end = path.end_time();
        let goal = *path.states.last().expect("paths are non-empty");
        self.parked.insert(goal.0, (end, agent));
        self.horizon = self.horizon.max(end);
    }

    /// Latest timestep carrying any finite reservation. Goal parking extends
    /// past the horizon forever.
    #[inline]
    pub fn horizon(&self) -> Timestep {
        self.horizon
    }

    /// Agent occupying `v` at `t`, if any (including parked agents).
    pub fn occupant(&self, v: Vertex, t: Timestep) -> Option<usize> {
        if let Some(&(start, agent)) = self.parked.get(&v.0) {
            if t >= start {
                return Some(agent);
            }
        }
        if t <= self.horizon {
            return self.vertex_at.get(&vertex_key(v, t)).copied();
        }
        None
    }

    #[inline]
    pub fn is_vertex_free(&self, v: Vertex, t: Timestep) -> bool {
        self.occupant(v, t).is_none()
    }

    /// True when moving `from -> to` during `[t, t+1]` would traverse an edge
    /// already reserved in the opposite direction.
    #[inline]
    pub fn is_swap_reserved(&self, from: Vertex, to: Vertex, t: Timestep) -> bool {
        t <= self.horizon && self.edge_at.contains_key(&edge_key(to, from, t))
    }

    /// True when an agent arriving at `v` at `arrival` may stay there forever:
    /// no other agent parks on `v` and no reservation touches `v` later.
    pub fn can_park(&self, v: Vertex, arrival: Timestep) -> bool {
        if self.parked.contains_key(&v.0) {
            return false;
        }
        match self.last_vertex_use.get(&v.0) {
            Some(&last) => last <= arrival,
            None => true,
        }
    }

    pub fn parked_from(&self, v: Vertex) -> Option<Timestep> {
        self.parked.get(&v.0).map(|&(start, _)| start)
    }

    pub fn vertex_entry_count(&self) -> usize {
        self.vertex_at.len()
    }

    pub fn edge_entry_count(&self) -> usize {
        self.edge_at.len()
    }
}

/// Builds a reservation table from a set of structurally valid paths.
pub fn build_reservation<'a, I>(paths: I, horizon_hint: Timestep) -> ReservationTable
where
    I: IntoIterator<Item = &'a Path>,
{
    let mut table = ReservationTable::new(horizon_hint);
    for p in paths {
        table.add_path(p);
    }
    table
}

/// Default per-agent expansion budget for constrained planning. The
/// distance-proportional term alone starves short-distance agents that must
/// wait out crossing traffic, so the map-area term provides the floor every
/// agent needs for temporal dodging; only pathologically congested replans
/// exhaust the sum.
#[inline]
pub fn default_node_budget(map: &GridMap, dist_start: Timestep) -> u64 {
    4 * (dist_start as u64 + 1) * map.width() as u64 + 8 * map.cell_count() as u64
}

/// Outcome of a constrained single-agent search. `Exhausted` means the node
/// budget ran out; `Infeasible` means the open list emptied, proving there is
/// no collision-free path within the search horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanResult {
    Found { path: Path, expansions: u64 },
    Exhausted { expansions: u64 },
    Infeasible { expansions: u64 },
}

impl PlanResult {
    pub fn expansions(&self) -> u64 {
        match *self {
            PlanResult::Found { expansions, .. }
            | PlanResult::Exhausted { expansions }
            | PlanResult::Infeasible { expansions } => expansions,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
struct Node {
    f: u32,
    g: u32,
    vertex: Vertex,
    is_wait: bool,
    seq: u64,
    key: u64,
}

// Pop order: smallest f, then largest g (deeper nodes), then smallest vertex
// index, then move before wait, then FIFO. The heap is a max-heap, so
// `Ordering::Greater` means "pop first".
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .cmp(&self.f)
            .then_with(|| self.g.cmp(&other.g))
            .then_with(|| other.vertex.cmp(&self.vertex))
            .then_with(|| other.is_wait.cmp(&self.is_wait))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Space-time A* (f = g + BFS distance) for one agent against `table`,
/// including the parked-forever semantics of already-planned paths. The
/// returned path is cost-minimal among paths found within `node_budget`
/// expansions, has no vertex or edge conflict with the table, and its own
/// final goal-parking does not collide with any reservation after arrival.
///
/// Beyond the table's horizon the search collapses the time dimension: all
/// reservations have expired there, so only goal-parked cells stay blocked and
/// the state space is finite.
pub fn plan_constrained_path(
    map: &GridMap,
    agent_id: usize,
    start: Vertex,
    goal: Vertex,
    dist: &DistanceField,
    table: &ReservationTable,
    node_budget: u64,
) -> PlanResult {
    debug_assert_eq!(dist.goal(), goal);
    if !dist.reachable(start) {
        return PlanResult::Infeasible { expansions: 0 };
    }

    // First timestep at which every finite reservation has expired.
    let saturation = table.horizon() + 1;
    let state_key = |v: Vertex, t: Timestep| vertex_key(v, t.min(saturation));

    let mut open = BinaryHeap::new();
    let mut came_from: FastMap<u64, u64> = FastMap::default();
    // Best g seen per state key. Before the horizon g is pinned to the
    // timestep, but on the collapsed layer a state can be re-reached cheaper,
    // so pushes use lazy decrease-key semantics.
    let mut best_g: FastMap<u64, u32> = FastMap::default();
    let mut closed: FastMap<u64, Vertex> = FastMap::default();
    let mut seq: u64 = 0;
    let mut expansions: u64 = 0;

    let start_key = state_key(start, 0);
    best_g.insert(start_key, 0);
    open.push(Node {
        f: dist.get(start),
        g: 0,
        vertex: start,
        is_wait: false,
        seq,
        key: start_key,
    });

    while let Some(node) = open.pop() {
        if closed.contains_key(&node.key) {
            continue;
        }
        if expansions >= node_budget {
            return PlanResult::Exhausted { expansions };
        }
        expansions += 1;
        closed.insert(node.key, node.vertex);

        let t = node.g;
        if node.vertex == goal && table.can_park(goal, t) {
            // Rebuild the state sequence by walking parents; each hop is one
            // timestep, so positions recover the timeline.
            let mut states = Vec::with_capacity(t as usize + 1);
            let mut key = node.key;
            states.push(node.vertex);
            while let Some(&parent) = came_from.get(&key) {
                states.push(closed[&parent]);
                key = parent;
            }
            states.reverse();
            debug_assert_eq!(states.len() as u64, t as u64 + 1);
            return PlanResult::Found {
                path: Path::new(agent_id, states),
                expansions,
            };
        }

        let arrival = t + 1;
        let mut push = |to: Vertex, is_wait: bool, seq: &mut u64| {
            if !dist.reachable(to) {
                return;
            }
            let key = state_key(to, arrival);
            if closed.contains_key(&key) {
                return;
            }
            if best_g.get(&key).is_some_and(|&g| g <= arrival) {
                return;
            }
            if !table.is_vertex_free(to, arrival) {
                return;
            }
            if !is_wait && table.is_swap_reserved(node.vertex, to, t) {
                return;
            }
            best_g.insert(key, arrival);
            came_from.insert(key, node.key);
            *seq += 1;
            open.push(Node {
                f: arrival + dist.get(to),
                g: arrival,
                vertex: to,
                is_wait,
                seq: *seq,
                key,
            });
        };

        for n in map.neighbors(node.vertex) {
            push(n, false, &mut seq);
        }
        push(node.vertex, true, &mut seq);
    }

    PlanResult::Infeasible { expansions }
}
