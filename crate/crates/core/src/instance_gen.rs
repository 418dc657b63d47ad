//! Seeded random maps and instances for tests and benchmarks.

use rand::Rng;

use crate::engine::task_rng;
use crate::model::{GridMap, Instance, Vertex};

/// Random map whose passable cells always form one connected component:
/// obstacles are added one at a time and rejected if they would split the map.
pub fn random_connected_map(width: u32, height: u32, blocked_fraction: f64, seed: u64) -> GridMap {
    assert!((0.0..1.0).contains(&blocked_fraction));
    let cells = (width as usize) * (height as usize);
    let target = (cells as f64 * blocked_fraction) as usize;
    let mut blocked = vec![false; cells];
    let mut rng = task_rng(seed, 0x6d61_7067_656e);
    let mut placed = 0;
    let mut attempts = 0;
    while placed < target && attempts < 50 * cells {
        attempts += 1;
        let cell = rng.gen_range(0..cells);
        if blocked[cell] {
            continue;
        }
        blocked[cell] = true;
        if is_connected(width, height, &blocked) {
            placed += 1;
        } else {
            blocked[cell] = false;
        }
    }
    GridMap::new(width, height, blocked)
}

fn is_connected(width: u32, height: u32, blocked: &[bool]) -> bool {
    let Some(first) = blocked.iter().position(|&b| !b) else {
        return false;
    };
    let total = blocked.iter().filter(|&&b| !b).count();
    let mut seen = vec![false; blocked.len()];
    let mut stack = vec![first];
    seen[first] = true;
    let mut reached = 0;
    while let Some(cell) = stack.pop() {
        reached += 1;
        let x = (cell as u32) % width;
        let y = (cell as u32) / width;
        for (nx, ny) in [
            (x, y.wrapping_sub(1)),
            (x, y + 1),
            (x.wrapping_sub(1), y),
            (x + 1, y),
        ] {
            if nx < width && ny < height {
                let idx = (ny * width + nx) as usize;
                if !blocked[idx] && !seen[idx] {
                    seen[idx] = true;
                    stack.push(idx);
                }
            }
        }
    }
    reached == total
}

/// Instance with `k` agents: distinct random starts and distinct random goals
/// drawn from the passable cells.
pub fn random_instance(map: &GridMap, k: usize, seed: u64) -> Instance {
    let cells: Vec<Vertex> = map.passable_vertices().collect();
    assert!(k <= cells.len(), "not enough passable cells for {k} agents");
    let mut rng = task_rng(seed, 0x696e_7374);
    let starts = rand::seq::index::sample(&mut rng, cells.len(), k);
    let goals = rand::seq::index::sample(&mut rng, cells.len(), k);
    let pairs: Vec<(Vertex, Vertex)> = starts
        .iter()
        .zip(goals.iter())
        .map(|(s, g)| (cells[s], cells[g]))
        .collect();
    Instance::new(map.clone(), &pairs).expect("connected map yields a valid instance")
}
