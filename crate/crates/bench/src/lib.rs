//! Shared fixtures for the engine benchmarks.

use metaopt::tsp::{generate_instance, CityGraph};

pub const BENCH_SEED: u64 = 0xC0FFEE;

/// Deterministic Euclidean instance sized for benchmarking.
pub fn bench_graph(n: usize) -> CityGraph {
    generate_instance(n, BENCH_SEED, 0.0, 5.0)
}
