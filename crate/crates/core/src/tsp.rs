//! Symmetric traveling salesman reference problem.
//!
//! A problem instance is a symmetric non-negative distance matrix; a
//! solution is a path of city indices, complete when it is a permutation of
//! `0..n`. The cost of a complete tour is its cyclic length, including the
//! return edge to the start city.
//!
//! Annealing moves swap two cities; restarts draw a uniformly random tour.
//! Branching appends unvisited cities nearest-first, the lower bound adds
//! the partial path's edges to the k cheapest still-unused edges, and
//! look-ahead completion appends the unvisited cities in random order.

use serde::{Deserialize, Serialize};

use crate::anneal::AnnealProblem;
use crate::bnb::BnbProblem;
use crate::problem::{CostValue, Problem, ProblemError};
use crate::rng::EngineRng;
use rand::seq::SliceRandom;
use rand::Rng;

/// A tour (possibly partial) as a sequence of distinct city indices.
pub type Tour = Vec<usize>;

/// Symmetric city distance matrix.
///
/// Invariants, enforced at construction: square, `dist[i][j] == dist[j][i]`,
/// zero diagonal, all entries finite and non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityGraph {
    n: usize,
    dist: Vec<Vec<f64>>,
}

impl CityGraph {
    pub fn from_matrix(dist: Vec<Vec<f64>>) -> Result<Self, ProblemError> {
        let n = dist.len();
        let violation = |detail: String| ProblemError::ContractViolation {
            problem: "tsp",
            detail,
        };
        if n == 0 {
            return Err(violation("distance matrix is empty".into()));
        }
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(violation(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 {
                    return Err(violation(format!("dist[{i}][{j}] = {d} is invalid")));
                }
                if d != dist[j][i] {
                    return Err(violation(format!("dist[{i}][{j}] != dist[{j}][{i}]")));
                }
            }
            if row[i] != 0.0 {
                return Err(violation(format!("dist[{i}][{i}] must be zero")));
            }
        }
        Ok(Self { n, dist })
    }

    /// Builds the graph of pairwise Euclidean distances between 2D points.
    pub fn from_coords(coords: &[[f64; 2]]) -> Result<Self, ProblemError> {
        let n = coords.len();
        let mut dist = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = coords[i][0] - coords[j][0];
                let dy = coords[i][1] - coords[j][1];
                let d = (dx * dx + dy * dy).sqrt();
                dist[i][j] = d;
                dist[j][i] = d;
            }
        }
        Self::from_matrix(dist)
    }

    /// Four-city fixture with known optimum tour `[0, 1, 2, 3]` of cost 10.
    /// Handy in tests and docs.
    pub fn fixture4() -> Self {
        Self::from_matrix(vec![
            vec![0.0, 1.0, 5.0, 4.0],
            vec![1.0, 0.0, 2.0, 6.0],
            vec![5.0, 2.0, 0.0, 3.0],
            vec![4.0, 6.0, 3.0, 0.0],
        ])
        .expect("fixture matrix is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn distance(&self, from: usize, to: usize) -> f64 {
        self.dist[from][to]
    }

    pub fn matrix(&self) -> &Vec<Vec<f64>> {
        &self.dist
    }
}

/// Cyclic length of a complete tour: the sum of adjacent-city distances
/// plus the closing edge back to the first city.
pub fn tour_cost(graph: &CityGraph, tour: &Tour) -> Result<CostValue, ProblemError> {
    if !is_complete_tour(graph, tour) {
        return Err(ProblemError::ContractViolation {
            problem: "tsp",
            detail: format!(
                "cost requires a complete tour over {} cities, got {:?}",
                graph.n, tour
            ),
        });
    }
    let mut total = 0.0;
    for pair in tour.windows(2) {
        total += graph.distance(pair[0], pair[1]);
    }
    total += graph.distance(tour[tour.len() - 1], tour[0]);
    CostValue::new(total)
}

fn is_complete_tour(graph: &CityGraph, tour: &Tour) -> bool {
    if tour.len() != graph.n {
        return false;
    }
    let mut seen = vec![false; graph.n];
    for &city in tour {
        if city >= graph.n || seen[city] {
            return false;
        }
        seen[city] = true;
    }
    true
}

/// New tour with the contents of two positions exchanged, the pair chosen
/// uniformly among distinct index pairs. Tours of fewer than two cities are
/// returned unchanged.
pub fn swap_candidate(tour: &Tour, rng: &mut EngineRng) -> Tour {
    let mut next = tour.clone();
    let n = next.len();
    if n < 2 {
        return next;
    }
    let i = rng.gen_range(0..n);
    let mut j = rng.gen_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    next.swap(i, j);
    next
}

/// Uniformly random permutation of `0..n` (Fisher-Yates shuffle).
pub fn random_tour(n: usize, rng: &mut EngineRng) -> Tour {
    let mut tour: Tour = (0..n).collect();
    tour.shuffle(rng);
    tour
}

/// Children of a partial tour: one per unvisited city, appended to the
/// path. Order is ascending distance from the path's last city with ties
/// by city index; from the empty root, ascending city index.
pub fn tsp_branch(graph: &CityGraph, partial: &Tour) -> Vec<Tour> {
    let mut visited = vec![false; graph.n];
    for &city in partial {
        visited[city] = true;
    }
    let mut unvisited: Vec<usize> = (0..graph.n).filter(|&c| !visited[c]).collect();
    if let Some(&last) = partial.last() {
        unvisited.sort_by(|&a, &b| {
            graph
                .distance(last, a)
                .total_cmp(&graph.distance(last, b))
                .then(a.cmp(&b))
        });
    }
    unvisited
        .into_iter()
        .map(|city| {
            let mut child = partial.clone();
            child.push(city);
            child
        })
        .collect()
}

/// Lower bound for all tours extending `partial`: the partial path's edge
/// sum plus the k cheapest city-pair distances not already used as path
/// edges, where k edges are still needed to visit every unvisited city and
/// return to the start (`k = n - m + 1` for a path of length `m >= 1`, and
/// `k = n` from the empty root).
pub fn tsp_lbound(graph: &CityGraph, partial: &Tour) -> CostValue {
    let n = graph.n;
    let m = partial.len();

    let mut path_sum = 0.0;
    let mut used = vec![false; n * n];
    for pair in partial.windows(2) {
        path_sum += graph.distance(pair[0], pair[1]);
        let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
        used[a * n + b] = true;
    }

    let k = if m == 0 { n } else { n - m + 1 };
    let mut remaining: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in (a + 1)..n {
            if !used[a * n + b] {
                remaining.push(graph.distance(a, b));
            }
        }
    }
    remaining.sort_by(f64::total_cmp);
    let tail: f64 = remaining.iter().take(k).sum();

    CostValue::new(path_sum + tail).expect("bound over finite distances is finite")
}

/// Completes a partial tour by appending the unvisited cities in uniformly
/// random order. Complete tours are returned unchanged.
pub fn tsp_complete(graph: &CityGraph, partial: &Tour, rng: &mut EngineRng) -> Tour {
    let mut visited = vec![false; graph.n];
    for &city in partial {
        visited[city] = true;
    }
    let mut suffix: Vec<usize> = (0..graph.n).filter(|&c| !visited[c]).collect();
    suffix.shuffle(rng);
    let mut tour = partial.clone();
    tour.extend(suffix);
    tour
}

/// Samples `n` city coordinates i.i.d. from a 2D normal distribution.
///
/// Uses the Box-Muller transform on the seeded generator so instances are
/// reproducible from `(n, seed, mu, sigma)` alone.
pub fn sample_coords(n: usize, seed: u64, mu: f64, sigma: f64) -> Vec<[f64; 2]> {
    let mut rng = crate::rng::seeded(seed);
    (0..n)
        .map(|_| {
            // u1 in (0, 1] keeps the logarithm finite
            let u1: f64 = 1.0 - rng.gen::<f64>();
            let u2: f64 = rng.gen();
            let r = (-2.0 * u1.ln()).sqrt();
            let theta = 2.0 * std::f64::consts::PI * u2;
            [mu + sigma * r * theta.cos(), mu + sigma * r * theta.sin()]
        })
        .collect()
}

/// Random Euclidean instance: `n` cities at normally distributed
/// coordinates, edge weights the pairwise Euclidean distances.
/// Deterministic per `(n, seed, mu, sigma)`.
pub fn generate_instance(n: usize, seed: u64, mu: f64, sigma: f64) -> CityGraph {
    CityGraph::from_coords(&sample_coords(n, seed, mu, sigma)).expect("euclidean matrix is valid")
}

/// Annealing temperature schedule used for this problem:
/// `4000 / (1 + e^(x/10000))`.
pub fn tsp_temperature(iters_since_reset: u64) -> f64 {
    4000.0 / (1.0 + (iters_since_reset as f64 / 10000.0).exp())
}

/// How the problem answers `initial_solution`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialTour {
    /// Cities in increasing numerical order.
    Identity,
    /// No initial solution; annealing refuses to start, branch and bound
    /// begins without an incumbent.
    None,
    /// A caller-supplied tour.
    Fixed(Tour),
}

/// Traveling salesman problem over a [`CityGraph`].
#[derive(Debug, Clone)]
pub struct TspProblem {
    graph: CityGraph,
    initial: InitialTour,
}

impl TspProblem {
    pub fn new(graph: CityGraph) -> Self {
        Self::with_initial(graph, InitialTour::Identity)
    }

    pub fn with_initial(graph: CityGraph, initial: InitialTour) -> Self {
        Self { graph, initial }
    }

    pub fn graph(&self) -> &CityGraph {
        &self.graph
    }
}

impl Problem for TspProblem {
    type Solution = Tour;
    type Params = CityGraph;

    fn params(&self) -> &CityGraph {
        &self.graph
    }

    fn cost(&self, solution: &Tour) -> Result<CostValue, ProblemError> {
        tour_cost(&self.graph, solution)
    }

    fn initial_solution(&self) -> Option<Tour> {
        match &self.initial {
            InitialTour::Identity => Some((0..self.graph.n).collect()),
            InitialTour::None => None,
            InitialTour::Fixed(tour) => Some(tour.clone()),
        }
    }
}

impl AnnealProblem for TspProblem {
    fn next_candidate(&self, current: &Tour, rng: &mut EngineRng) -> Tour {
        swap_candidate(current, rng)
    }

    fn reset_candidate(&self, rng: &mut EngineRng) -> Tour {
        random_tour(self.graph.n, rng)
    }

    fn temperature(&self, iters_since_reset: u64) -> f64 {
        tsp_temperature(iters_since_reset)
    }
}

impl BnbProblem for TspProblem {
    fn root(&self) -> Tour {
        Vec::new()
    }

    fn branch(&self, partial: &Tour) -> Vec<Tour> {
        tsp_branch(&self.graph, partial)
    }

    fn lbound(&self, partial: &Tour) -> CostValue {
        tsp_lbound(&self.graph, partial)
    }

    fn is_feasible(&self, solution: &Tour) -> bool {
        is_complete_tour(&self.graph, solution)
    }

    fn supports_completion(&self) -> bool {
        true
    }

    fn complete_solution(&self, partial: &Tour, rng: &mut EngineRng) -> Option<Tour> {
        Some(tsp_complete(&self.graph, partial, rng))
    }
}
