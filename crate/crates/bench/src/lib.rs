//! Shared fixtures for the criterion benchmarks.

use mapf_lns::{initial_solution, instance_gen, task_rng, Instance, Solution};

/// Congested 32x32 instance with a feasible starting solution.
pub fn bench_instance(k: usize, seed: u64) -> (Instance, Solution) {
    let map = instance_gen::random_connected_map(32, 32, 0.1, seed);
    let instance = instance_gen::random_instance(&map, k, seed ^ 0xbe9c);
    let solution = initial_solution(&instance, &mut task_rng(seed, 0), 50)
        .expect("generated instances admit a PP solution");
    (instance, solution)
}
