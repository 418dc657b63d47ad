//! Destroy heuristics for neighborhood selection: random-, agent-, and
//! map-based, plus the adaptive weights and roulette-wheel selection that pick
//! between them.

use rand::Rng;

use crate::fasthash::FastMap;
use crate::model::{Cost, Instance, Solution, Vertex};

/// Lower bound applied to every heuristic weight. The update rules can decay a
/// weight toward zero, which would make a heuristic permanently unselectable;
/// the floor keeps exploration alive.
pub const WEIGHT_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DestroyHeuristic {
    Random,
    AgentBased,
    MapBased,
}

impl DestroyHeuristic {
    pub const ALL: [DestroyHeuristic; 3] = [
        DestroyHeuristic::Random,
        DestroyHeuristic::AgentBased,
        DestroyHeuristic::MapBased,
    ];

    #[inline]
    fn index(self) -> usize {
        match self {
            DestroyHeuristic::Random => 0,
            DestroyHeuristic::AgentBased => 1,
            DestroyHeuristic::MapBased => 2,
        }
    }
}

/// Updatable selection weights, one per destroy heuristic, with the reaction
/// factor gamma controlling how fast they move.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicWeights {
    weights: [f64; 3],
    gamma: f64,
}

impl HeuristicWeights {
    /// All weights start at 1.
    pub fn new(gamma: f64) -> Self {
        assert!((0.0..=1.0).contains(&gamma), "gamma must be in [0,1]");
        HeuristicWeights {
            weights: [1.0; 3],
            gamma,
        }
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    pub fn get(&self, h: DestroyHeuristic) -> f64 {
        self.weights[h.index()]
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Successful iteration: `w <- gamma * max(improvement, 0) + (1-gamma) * w`
    /// for the used heuristic only.
    pub fn update_success(&mut self, h: DestroyHeuristic, improvement: Cost) {
        let w = &mut self.weights[h.index()];
        *w = (self.gamma * improvement as f64 + (1.0 - self.gamma) * *w).max(WEIGHT_FLOOR);
    }

    /// Failed iteration: decay the used heuristic's weight by `1 - gamma`.
    pub fn update_failure(&mut self, h: DestroyHeuristic) {
        let w = &mut self.weights[h.index()];
        *w = ((1.0 - self.gamma) * *w).max(WEIGHT_FLOOR);
    }
}

/// Roulette-wheel selection: heuristic `H` is drawn with probability
/// `w_H / sum(w)`.
pub fn select_heuristic<R: Rng>(weights: &HeuristicWeights, rng: &mut R) -> DestroyHeuristic {
    let total = weights.total();
    debug_assert!(total > 0.0);
    let mut x = rng.gen::<f64>() * total;
    for h in DestroyHeuristic::ALL {
        let w = weights.get(h);
        if x < w {
            return h;
        }
        x -= w;
    }
    DestroyHeuristic::MapBased
}

/// The agents whose paths one destroy operation removes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub heuristic_used: DestroyHeuristic,
    pub agents: Vec<usize>,
}

/// Seeding memory for the agent-based heuristic: once an agent seeds a
/// neighborhood it stays tabu until every positive-delay agent has had a turn
/// or the solution improves.
#[derive(Debug, Clone, Default)]
pub struct TabuState {
    seeded: Vec<bool>,
    last_soc: Option<Cost>,
}

impl TabuState {
    pub fn new(num_agents: usize) -> Self {
        TabuState {
            seeded: vec![false; num_agents],
            last_soc: None,
        }
    }

    /// Clears the set when the observed best-known SOC improved.
    pub fn observe_soc(&mut self, soc: Cost) {
        if self.last_soc.is_some_and(|prev| soc < prev) {
            self.seeded.iter_mut().for_each(|s| *s = false);
        }
        self.last_soc = Some(soc);
    }

    fn clear(&mut self) {
        self.seeded.iter_mut().for_each(|s| *s = false);
    }
}

#[inline]
fn delay(instance: &Instance, solution: &Solution, agent: usize) -> Cost {
    solution
        .path(agent)
        .cost()
        .saturating_sub(instance.agent(agent).shortest_dist as Cost)
}

/// Cell -> agents whose paths visit it, in agent order.
fn cell_visitors(solution: &Solution) -> FastMap<Vertex, Vec<usize>> {
    let mut index: FastMap<Vertex, Vec<usize>> = FastMap::default();
    for path in solution.paths() {
        let mut last: Option<Vertex> = None;
        for &v in &path.states {
            if last == Some(v) {
                continue;
            }
            let entry = index.entry(v).or_default();
            if entry.last() != Some(&path.agent_id) {
                entry.push(path.agent_id);
            }
            last = Some(v);
        }
    }
    index
}

/// Uniform random subset of `min(n, k)` distinct agents.
pub fn random_destroy<R: Rng>(instance: &Instance, n: usize, rng: &mut R) -> Neighborhood {
    assert!(n >= 1);
    let k = instance.num_agents();
    let take = n.min(k);
    let agents = rand::seq::index::sample(rng, k, take).into_vec();
    Neighborhood {
        heuristic_used: DestroyHeuristic::Random,
        agents,
    }
}

/// Fills `picked` up to `target` with uniformly random agents not yet chosen.
fn fill_random<R: Rng>(picked: &mut Vec<usize>, taken: &mut [bool], target: usize, rng: &mut R) {
    let mut remaining: Vec<usize> = (0..taken.len()).filter(|&i| !taken[i]).collect();
    while picked.len() < target && !remaining.is_empty() {
        let i = rng.gen_range(0..remaining.len());
        let agent = remaining.swap_remove(i);
        taken[agent] = true;
        picked.push(agent);
    }
}

/// Seeds on a maximal-delay non-tabu agent, then grows the set by a random
/// walk from a random state on the seed's path, collecting agents whose paths
/// occupy the visited cells. Remaining slots are filled uniformly at random.
/// Falls back to a purely random subset when every delay is zero.
pub fn agent_based_destroy<R: Rng>(
    instance: &Instance,
    solution: &Solution,
    n: usize,
    rng: &mut R,
    tabu: &mut TabuState,
) -> Neighborhood {
    assert!(n >= 1);
    let k = instance.num_agents();
    let target = n.min(k);
    if tabu.seeded.len() != k {
        *tabu = TabuState::new(k);
    }

    let delays: Vec<Cost> = (0..k).map(|i| delay(instance, solution, i)).collect();
    if delays.iter().all(|&d| d == 0) {
        let mut nb = random_destroy(instance, n, rng);
        nb.heuristic_used = DestroyHeuristic::AgentBased;
        return nb;
    }

    let pick_seed = |seeded: &[bool]| -> Option<usize> {
        (0..k)
            .filter(|&i| delays[i] > 0 && !seeded[i])
            .max_by_key(|&i| (delays[i], std::cmp::Reverse(i)))
    };
    let seed = match pick_seed(&tabu.seeded) {
        Some(s) => s,
        None => {
            // Every positive-delay agent has been seeded; start a new round.
            tabu.clear();
            pick_seed(&tabu.seeded).expect("some agent has positive delay")
        }
    };
    tabu.seeded[seed] = true;

    let mut taken = vec![false; k];
    let mut picked = Vec::with_capacity(target);
    taken[seed] = true;
    picked.push(seed);

    let visitors = cell_visitors(solution);
    let map = instance.map();
    let seed_path = solution.path(seed);
    let mut pos = seed_path.states[rng.gen_range(0..seed_path.states.len())];
    let walk_cap = 10 * map.width() as usize;
    for _ in 0..walk_cap {
        if picked.len() >= target {
            break;
        }
        if let Some(agents) = visitors.get(&pos) {
            for &a in agents {
                if picked.len() >= target {
                    break;
                }
                if !taken[a] {
                    taken[a] = true;
                    picked.push(a);
                }
            }
        }
        let options: Vec<Vertex> = map.neighbors(pos).collect();
        if options.is_empty() {
            break; // walk stalls
        }
        pos = options[rng.gen_range(0..options.len())];
    }

    fill_random(&mut picked, &mut taken, target, rng);
    Neighborhood {
        heuristic_used: DestroyHeuristic::AgentBased,
        agents: picked,
    }
}

/// Picks a random intersection (degree >= 3 vertex) and sweeps outward from it
/// breadth-first, collecting agents whose paths visit the swept cells, until
/// the neighborhood is full. Falls back to a random subset when the map has no
/// intersection or too few agents visit the swept region.
pub fn map_based_destroy<R: Rng>(
    instance: &Instance,
    solution: &Solution,
    n: usize,
    rng: &mut R,
) -> Neighborhood {
    assert!(n >= 1);
    let k = instance.num_agents();
    let target = n.min(k);
    let map = instance.map();

    let intersections: Vec<Vertex> = map
        .passable_vertices()
        .filter(|&v| map.degree(v) >= 3)
        .collect();
    if intersections.is_empty() {
        let mut nb = random_destroy(instance, n, rng);
        nb.heuristic_used = DestroyHeuristic::MapBased;
        return nb;
    }
    let center = intersections[rng.gen_range(0..intersections.len())];

    let visitors = cell_visitors(solution);
    let mut taken = vec![false; k];
    let mut picked = Vec::with_capacity(target);
    let mut seen = vec![false; map.cell_count()];
    let mut queue = std::collections::VecDeque::new();
    seen[center.index()] = true;
    queue.push_back(center);
    'sweep: while let Some(v) = queue.pop_front() {
        if let Some(agents) = visitors.get(&v) {
            for &a in agents {
                if !taken[a] {
                    taken[a] = true;
                    picked.push(a);
                    if picked.len() >= target {
                        break 'sweep;
                    }
                }
            }
        }
        for nb in map.neighbors(v) {
            if !seen[nb.index()] {
                seen[nb.index()] = true;
                queue.push_back(nb);
            }
        }
    }

    if picked.len() < target {
        let mut nb = random_destroy(instance, n, rng);
        nb.heuristic_used = DestroyHeuristic::MapBased;
        return nb;
    }
    Neighborhood {
        heuristic_used: DestroyHeuristic::MapBased,
        agents: picked,
    }
}
