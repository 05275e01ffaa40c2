//! Shared test oracle: exhaustive enumeration, independent of the engines.

use itertools::Itertools;
use metaopt::tsp::{tour_cost, CityGraph, Tour};

/// Brute-force optimum by enumerating every tour starting at city 0
/// (rotations of a cyclic tour cost the same). Returns the best tour and
/// its cost.
pub fn brute_force_optimum(graph: &CityGraph) -> (Tour, f64) {
    let n = graph.n();
    if n == 1 {
        return (vec![0], 0.0);
    }
    let mut best_tour = Vec::new();
    let mut best_cost = f64::INFINITY;
    for suffix in (1..n).permutations(n - 1) {
        let mut tour = Vec::with_capacity(n);
        tour.push(0);
        tour.extend(suffix);
        let cost = tour_cost(graph, &tour).unwrap().value();
        if cost < best_cost {
            best_cost = cost;
            best_tour = tour;
        }
    }
    (best_tour, best_cost)
}
