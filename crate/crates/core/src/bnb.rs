//! Branch and bound engine.
//!
//! The engine grows a tree of increasingly constrained partial solutions.
//! Popping a node costs one iteration; a node is pruned when its lower bound
//! cannot beat the incumbent, feasible nodes update the incumbent and are
//! never branched, and in look-ahead mode every surviving node is first
//! heuristically completed to obtain incumbents early.
//!
//! Three selection strategies order the frontier:
//!
//! * `depth-first` — last-in-first-out with lazy child generation: each
//!   stack entry holds a node and a resumable child cursor, and children are
//!   regenerated deterministically on demand, so the frontier stays linear
//!   in the maximum tree depth.
//! * `depth-first-best-first` — keyed `(-depth, lower_bound, seq)`: deepest
//!   node first, lowest bound among equal depths.
//! * `best-first-depth-first` — keyed `(lower_bound, -depth, seq)`: lowest
//!   bound first, deepest among equal bounds.
//!
//! The `seq` insertion counter breaks every remaining tie first-in-first-out
//! so the pop order is total and runs are reproducible.

use std::cell::OnceCell;
use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::BinaryHeap;
use std::hash::{Hash, Hasher};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::problem::{offer_candidate, CostValue, EngineError, Incumbent, Problem};
use crate::rng::EngineRng;

/// Problem operations specific to branch and bound.
pub trait BnbProblem: Problem {
    /// The least-constrained partial solution, root of the search tree.
    fn root(&self) -> Self::Solution;

    /// Child solutions strictly extending `partial`, in a deterministic
    /// order. The depth-first frontier relies on regenerating exactly the
    /// same sequence when resuming from a checkpoint.
    fn branch(&self, partial: &Self::Solution) -> Vec<Self::Solution>;

    /// Lower bound on the cost of every feasible solution obtainable by
    /// branching on `partial`.
    fn lbound(&self, partial: &Self::Solution) -> CostValue;

    /// True only for complete solutions satisfying all constraints.
    fn is_feasible(&self, solution: &Self::Solution) -> bool;

    /// Whether `complete_solution` is implemented; look-ahead runs are
    /// rejected at startup when it is not.
    fn supports_completion(&self) -> bool {
        false
    }

    /// Heuristically completes a partial solution. `None` signals the
    /// completion failed, which the engine treats as "no incumbent update";
    /// the node is still branched.
    fn complete_solution(
        &self,
        partial: &Self::Solution,
        rng: &mut EngineRng,
    ) -> Option<Self::Solution> {
        let _ = (partial, rng);
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionStrategy {
    DepthFirst,
    DepthFirstBestFirst,
    BestFirstDepthFirst,
}

impl SelectionStrategy {
    /// Frontier ordering key, ascending; `None` for depth-first, whose
    /// frontier is a stack rather than a priority queue.
    pub fn key<S>(self, node: &BnbNode<S>) -> Option<HeapKey> {
        let lb = node.lower_bound.value();
        let neg_depth = -(node.depth as f64);
        match self {
            Self::DepthFirst => None,
            Self::DepthFirstBestFirst => Some(HeapKey::new(neg_depth, lb, node.seq)),
            Self::BestFirstDepthFirst => Some(HeapKey::new(lb, neg_depth, node.seq)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BnbType {
    Traditional,
    LookAhead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BnbStatus {
    /// Frontier emptied: the incumbent is optimal, or the problem is
    /// infeasible when there is none.
    Exhausted,
    ItersLimit,
    TimeLimit,
}

/// Per-call search budget and variant selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BnbConfig {
    /// Node pops allowed in this call. Must be at least 1.
    pub iters_limit: u64,
    /// Wall-clock budget; `None` means unlimited.
    pub time_limit: Option<Duration>,
    pub bnb_type: BnbType,
    pub strategy: SelectionStrategy,
    /// Disable only for differential testing: an exhausted run must return
    /// the same best cost with pruning off.
    pub pruning: bool,
}

impl BnbConfig {
    pub fn new(strategy: SelectionStrategy, bnb_type: BnbType) -> Self {
        Self {
            iters_limit: u64::MAX,
            time_limit: None,
            bnb_type,
            strategy,
            pruning: true,
        }
    }

    pub fn with_iters(mut self, iters_limit: u64) -> Self {
        self.iters_limit = iters_limit;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.iters_limit == 0 {
            return Err(EngineError::InvalidConfig(
                "iters_limit must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One tree node: a partial solution with its cached bound, depth, and
/// insertion sequence number.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BnbNode<S> {
    pub partial: S,
    pub lower_bound: CostValue,
    pub depth: u32,
    pub seq: u64,
}

/// Totally ordered frontier key: primary, then secondary, then insertion
/// sequence. Components compare by IEEE total order.
#[derive(Debug, Clone, Copy)]
pub struct HeapKey {
    primary: f64,
    secondary: f64,
    seq: u64,
}

impl HeapKey {
    fn new(primary: f64, secondary: f64, seq: u64) -> Self {
        Self {
            primary,
            secondary,
            seq,
        }
    }
}

impl PartialEq for HeapKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapKey {}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.primary
            .total_cmp(&other.primary)
            .then(self.secondary.total_cmp(&other.secondary))
            .then(self.seq.cmp(&other.seq))
    }
}

/// Depth-first stack entry. `cursor` is `None` while the node itself awaits
/// evaluation and `Some(k)` once its first `k` children have been yielded.
/// Generated children are cached in memory but never serialized; a resumed
/// run regenerates them through `branch`, which is deterministic per node.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: Deserialize<'de>"))]
struct DfEntry<S> {
    node: BnbNode<S>,
    cursor: Option<usize>,
    #[serde(skip)]
    children: OnceCell<Vec<S>>,
}

impl<S> DfEntry<S> {
    fn pending(node: BnbNode<S>) -> Self {
        Self {
            node,
            cursor: None,
            children: OnceCell::new(),
        }
    }

    fn expanding(node: BnbNode<S>) -> Self {
        Self {
            node,
            cursor: Some(0),
            children: OnceCell::new(),
        }
    }
}

#[derive(Debug, Clone)]
struct KeyedEntry<S> {
    key: HeapKey,
    node: BnbNode<S>,
}

impl<S> PartialEq for KeyedEntry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl<S> Eq for KeyedEntry<S> {}

impl<S> PartialOrd for KeyedEntry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S> Ord for KeyedEntry<S> {
    // reversed: BinaryHeap is a max-heap and we pop the smallest key
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.cmp(&self.key)
    }
}

#[derive(Debug, Clone)]
enum FrontierRepr<S> {
    DepthFirst {
        stack: Vec<DfEntry<S>>,
    },
    Keyed {
        strategy: SelectionStrategy,
        heap: BinaryHeap<KeyedEntry<S>>,
    },
}

/// Engine frontier. Serializes canonically: the keyed heap is emitted in
/// ascending key order so equal frontiers produce identical bytes.
#[derive(Debug, Clone)]
pub struct Frontier<S> {
    repr: FrontierRepr<S>,
}

impl<S: Clone> Frontier<S> {
    fn new(strategy: SelectionStrategy) -> Self {
        let repr = match strategy {
            SelectionStrategy::DepthFirst => FrontierRepr::DepthFirst { stack: Vec::new() },
            _ => FrontierRepr::Keyed {
                strategy,
                heap: BinaryHeap::new(),
            },
        };
        Self { repr }
    }

    pub fn strategy(&self) -> SelectionStrategy {
        match &self.repr {
            FrontierRepr::DepthFirst { .. } => SelectionStrategy::DepthFirst,
            FrontierRepr::Keyed { strategy, .. } => *strategy,
        }
    }

    /// Number of stored entries (nodes or resumable cursors).
    pub fn len(&self) -> usize {
        match &self.repr {
            FrontierRepr::DepthFirst { stack } => stack.len(),
            FrontierRepr::Keyed { heap, .. } => heap.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Seeds the frontier with a materialized node (the root).
    fn push_node(&mut self, node: BnbNode<S>) {
        match &mut self.repr {
            FrontierRepr::DepthFirst { stack } => stack.push(DfEntry::pending(node)),
            FrontierRepr::Keyed { strategy, heap } => {
                let key = strategy.key(&node).expect("keyed strategy has a key");
                heap.push(KeyedEntry { key, node });
            }
        }
    }

    /// Registers a popped node for child enumeration. The keyed frontier
    /// generates and bound-evaluates all children now, keeping only those
    /// beating `bound`; the depth-first frontier defers generation to `pop`.
    fn expand<P>(
        &mut self,
        node: BnbNode<S>,
        problem: &P,
        next_seq: &mut u64,
        bound: Option<CostValue>,
    ) where
        P: BnbProblem<Solution = S>,
    {
        match &mut self.repr {
            FrontierRepr::DepthFirst { stack } => stack.push(DfEntry::expanding(node)),
            FrontierRepr::Keyed { strategy, heap } => {
                for partial in problem.branch(&node.partial) {
                    let lower_bound = problem.lbound(&partial);
                    if let Some(best) = bound {
                        if problem.cost_delta(lower_bound, best) >= 0.0 {
                            continue;
                        }
                    }
                    let child = BnbNode {
                        partial,
                        lower_bound,
                        depth: node.depth + 1,
                        seq: *next_seq,
                    };
                    *next_seq += 1;
                    let key = strategy.key(&child).expect("keyed strategy has a key");
                    heap.push(KeyedEntry { key, node: child });
                }
            }
        }
    }

    /// Yields the next node to evaluate, or `None` when the frontier is
    /// exhausted. Depth-first materializes the top entry's next child here,
    /// dropping entries whose children have all been yielded.
    fn pop<P>(&mut self, problem: &P, next_seq: &mut u64) -> Option<BnbNode<S>>
    where
        P: BnbProblem<Solution = S>,
    {
        match &mut self.repr {
            FrontierRepr::Keyed { heap, .. } => heap.pop().map(|entry| entry.node),
            FrontierRepr::DepthFirst { stack } => loop {
                let top = stack.last_mut()?;
                let DfEntry {
                    node,
                    cursor,
                    children,
                } = top;
                match *cursor {
                    None => {
                        let entry = stack.pop().expect("frontier entry present");
                        return Some(entry.node);
                    }
                    Some(k) => {
                        let kids = children.get_or_init(|| problem.branch(&node.partial));
                        if k >= kids.len() {
                            stack.pop();
                            continue;
                        }
                        let partial = kids[k].clone();
                        let depth = node.depth + 1;
                        *cursor = Some(k + 1);
                        let parent_done = k + 1 >= kids.len();
                        if parent_done {
                            stack.pop();
                        }
                        let child = BnbNode {
                            lower_bound: problem.lbound(&partial),
                            partial,
                            depth,
                            seq: *next_seq,
                        };
                        *next_seq += 1;
                        return Some(child);
                    }
                }
            },
        }
    }
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum FrontierSer<'a, S> {
    DepthFirst {
        entries: &'a [DfEntry<S>],
    },
    Keyed {
        strategy: SelectionStrategy,
        nodes: Vec<&'a BnbNode<S>>,
    },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum FrontierDe<S> {
    DepthFirst {
        entries: Vec<DfEntry<S>>,
    },
    Keyed {
        strategy: SelectionStrategy,
        nodes: Vec<BnbNode<S>>,
    },
}

impl<S: Serialize> Serialize for Frontier<S> {
    fn serialize<Ser: serde::Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        match &self.repr {
            FrontierRepr::DepthFirst { stack } => {
                FrontierSer::DepthFirst { entries: stack }.serialize(serializer)
            }
            FrontierRepr::Keyed { strategy, heap } => {
                let mut nodes: Vec<&BnbNode<S>> = heap.iter().map(|e| &e.node).collect();
                nodes.sort_by(|a, b| {
                    let (ka, kb) = (strategy.key(a).unwrap(), strategy.key(b).unwrap());
                    ka.cmp(&kb)
                });
                FrontierSer::Keyed {
                    strategy: *strategy,
                    nodes,
                }
                .serialize(serializer)
            }
        }
    }
}

impl<'de, S: Deserialize<'de> + Clone> Deserialize<'de> for Frontier<S> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(match FrontierDe::deserialize(deserializer)? {
            FrontierDe::DepthFirst { entries } => Self {
                repr: FrontierRepr::DepthFirst { stack: entries },
            },
            FrontierDe::Keyed { strategy, nodes } => {
                let mut frontier = Self::new(strategy);
                for node in nodes {
                    frontier.push_node(node);
                }
                frontier
            }
        })
    }
}

/// Complete search state, the unit persisted into checkpoints. `best_cost`
/// duplicates the incumbent cost at the top level of the serialized object
/// so stores can report it without decoding the frontier.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(
    serialize = "S: Serialize",
    deserialize = "S: serde::de::DeserializeOwned + Clone"
))]
pub struct BnbState<S> {
    pub best_cost: Option<CostValue>,
    pub incumbent: Option<Incumbent<S>>,
    pub frontier: Option<Frontier<S>>,
    pub next_seq: u64,
    /// Lifetime pop count, accumulated across resumed runs.
    pub iterations: u64,
    #[serde(with = "crate::rng::serde_chacha")]
    pub rng: EngineRng,
}

/// Per-call instrumentation.
#[derive(Debug, Clone, Default)]
pub struct BnbStats {
    /// Nodes popped in this call; never exceeds the iteration limit.
    pub pops: u64,
    pub pruned: u64,
    pub expanded: u64,
    pub completions: u64,
    /// Largest number of simultaneously stored frontier entries observed.
    pub peak_frontier: usize,
    /// Order-sensitive digest of the pop sequence; equal seeds and configs
    /// must reproduce it exactly.
    pub trace_hash: u64,
}

#[derive(Debug, Clone)]
pub struct BnbOutcome<S> {
    pub best: Option<Incumbent<S>>,
    pub status: BnbStatus,
    pub stats: BnbStats,
}

/// Branch and bound engine bound to one problem instance.
pub struct BnbSolver<P: BnbProblem> {
    problem: P,
    state: BnbState<P::Solution>,
}

impl<P: BnbProblem> BnbSolver<P> {
    /// Fresh solver. The incumbent starts from the problem's initial
    /// solution when one is provided; branch and bound tolerates its
    /// absence. The frontier is created on the first `solve` call, which
    /// fixes the selection strategy for the lifetime of the run.
    pub fn new(problem: P, seed: u64) -> Result<Self, EngineError> {
        let mut incumbent = None;
        if let Some(initial) = problem.initial_solution() {
            if !problem.is_feasible(&initial) {
                return Err(EngineError::InfeasibleInitialSolution);
            }
            let cost = problem.cost(&initial)?;
            incumbent = Some(Incumbent {
                solution: initial,
                cost,
            });
        }
        Ok(Self {
            state: BnbState {
                best_cost: incumbent.as_ref().map(|inc| inc.cost),
                incumbent,
                frontier: None,
                next_seq: 0,
                iterations: 0,
                rng: crate::rng::seeded(seed),
            },
            problem,
        })
    }

    pub fn resume(problem: P, state: BnbState<P::Solution>) -> Self {
        Self { problem, state }
    }

    pub fn resume_from_blob(problem: P, blob: &[u8]) -> Result<Self, EngineError> {
        let state = serde_json::from_slice(blob)?;
        Ok(Self::resume(problem, state))
    }

    pub fn problem(&self) -> &P {
        &self.problem
    }

    pub fn state(&self) -> &BnbState<P::Solution> {
        &self.state
    }

    /// Canonical serialized state for checkpointing.
    pub fn state_blob(&self) -> Vec<u8> {
        serde_json::to_vec(&self.state).expect("search state serializes")
    }

    pub fn best(&self) -> Option<&Incumbent<P::Solution>> {
        self.state.incumbent.as_ref()
    }

    /// Runs the search until the frontier empties, the pop budget is spent,
    /// or the time limit passes, whichever comes first.
    pub fn solve(&mut self, config: &BnbConfig) -> Result<BnbOutcome<P::Solution>, EngineError> {
        config.validate()?;
        if config.bnb_type == BnbType::LookAhead && !self.problem.supports_completion() {
            return Err(EngineError::CompletionUnsupported);
        }
        match &self.state.frontier {
            None => {
                let mut frontier = Frontier::new(config.strategy);
                let partial = self.problem.root();
                let root = BnbNode {
                    lower_bound: self.problem.lbound(&partial),
                    partial,
                    depth: 0,
                    seq: self.state.next_seq,
                };
                self.state.next_seq += 1;
                frontier.push_node(root);
                self.state.frontier = Some(frontier);
            }
            Some(frontier) if frontier.strategy() != config.strategy => {
                return Err(EngineError::StateMismatch(format!(
                    "frontier was built under {:?}, this run requested {:?}",
                    frontier.strategy(),
                    config.strategy
                )));
            }
            Some(_) => {}
        }

        let started = Instant::now();
        let mut stats = BnbStats {
            peak_frontier: self.state.frontier.as_ref().unwrap().len(),
            ..BnbStats::default()
        };
        let mut trace = DefaultHasher::new();

        let status = loop {
            let state = &mut self.state;
            let frontier = state.frontier.as_mut().unwrap();
            if frontier.is_empty() {
                break BnbStatus::Exhausted;
            }
            if let Some(limit) = config.time_limit {
                if started.elapsed() >= limit {
                    break BnbStatus::TimeLimit;
                }
            }
            if stats.pops >= config.iters_limit {
                break BnbStatus::ItersLimit;
            }
            let Some(node) = frontier.pop(&self.problem, &mut state.next_seq) else {
                break BnbStatus::Exhausted;
            };
            stats.pops += 1;
            state.iterations += 1;
            node.seq.hash(&mut trace);
            node.depth.hash(&mut trace);
            node.lower_bound.value().to_bits().hash(&mut trace);

            if config.pruning {
                if let Some(best) = state.best_cost {
                    if self.problem.cost_delta(node.lower_bound, best) >= 0.0 {
                        stats.pruned += 1;
                        continue;
                    }
                }
            }

            if self.problem.is_feasible(&node.partial) {
                let cost = self.problem.cost(&node.partial)?;
                if offer_candidate(&self.problem, &mut state.incumbent, &node.partial, cost) {
                    state.best_cost = Some(cost);
                }
                // feasible nodes have no children
                continue;
            }

            if config.bnb_type == BnbType::LookAhead {
                if let Some(completed) = self
                    .problem
                    .complete_solution(&node.partial, &mut state.rng)
                {
                    stats.completions += 1;
                    if self.problem.is_feasible(&completed) {
                        let cost = self.problem.cost(&completed)?;
                        if offer_candidate(&self.problem, &mut state.incumbent, &completed, cost) {
                            state.best_cost = Some(cost);
                        }
                    }
                }
            }

            let bound = if config.pruning {
                state.best_cost
            } else {
                None
            };
            let frontier = state.frontier.as_mut().unwrap();
            frontier.expand(node, &self.problem, &mut state.next_seq, bound);
            stats.expanded += 1;
            stats.peak_frontier = stats.peak_frontier.max(frontier.len());
        };

        stats.trace_hash = trace.finish();
        Ok(BnbOutcome {
            best: self.state.incumbent.clone(),
            status,
            stats,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsp::{CityGraph, InitialTour, TspProblem};

    fn m4() -> TspProblem {
        TspProblem::new(CityGraph::fixture4())
    }

    fn m4_no_initial() -> TspProblem {
        TspProblem::with_initial(CityGraph::fixture4(), InitialTour::None)
    }

    const ALL_STRATEGIES: [SelectionStrategy; 3] = [
        SelectionStrategy::DepthFirst,
        SelectionStrategy::DepthFirstBestFirst,
        SelectionStrategy::BestFirstDepthFirst,
    ];

    fn node(lb: f64, depth: u32, seq: u64) -> BnbNode<Vec<usize>> {
        BnbNode {
            partial: vec![],
            lower_bound: CostValue::new(lb).unwrap(),
            depth,
            seq,
        }
    }

    #[test]
    fn best_first_depth_first_orders_by_bound_then_depth() {
        let s = SelectionStrategy::BestFirstDepthFirst;
        // lower bound dominates
        assert!(s.key(&node(5.0, 2, 0)).unwrap() < s.key(&node(6.0, 9, 1)).unwrap());
        // deeper node wins among equal bounds
        assert!(s.key(&node(5.0, 3, 1)).unwrap() < s.key(&node(5.0, 2, 0)).unwrap());
    }

    #[test]
    fn depth_first_best_first_orders_by_depth_then_bound() {
        let s = SelectionStrategy::DepthFirstBestFirst;
        assert!(s.key(&node(9.0, 4, 1)).unwrap() < s.key(&node(1.0, 3, 0)).unwrap());
        // same depth: lower bound wins
        assert!(s.key(&node(1.0, 3, 1)).unwrap() < s.key(&node(2.0, 3, 0)).unwrap());
        // full tie: first-in wins
        assert!(s.key(&node(1.0, 3, 0)).unwrap() < s.key(&node(1.0, 3, 1)).unwrap());
        assert!(SelectionStrategy::DepthFirst
            .key(&node(1.0, 1, 0))
            .is_none());
    }

    #[test]
    fn every_configuration_exhausts_to_the_known_optimum() {
        for strategy in ALL_STRATEGIES {
            for bnb_type in [BnbType::Traditional, BnbType::LookAhead] {
                let mut solver = BnbSolver::new(m4(), 3).unwrap();
                let outcome = solver.solve(&BnbConfig::new(strategy, bnb_type)).unwrap();
                assert_eq!(
                    outcome.status,
                    BnbStatus::Exhausted,
                    "{strategy:?}/{bnb_type:?}"
                );
                let best = outcome.best.expect("incumbent");
                assert_eq!(best.cost.value(), 10.0, "{strategy:?}/{bnb_type:?}");
            }
        }
    }

    #[test]
    fn supplying_the_optimum_returns_it_unchanged() {
        let problem =
            TspProblem::with_initial(CityGraph::fixture4(), InitialTour::Fixed(vec![0, 1, 2, 3]));
        let mut solver = BnbSolver::new(problem, 0).unwrap();
        let outcome = solver
            .solve(&BnbConfig::new(
                SelectionStrategy::DepthFirst,
                BnbType::Traditional,
            ))
            .unwrap();
        assert_eq!(outcome.status, BnbStatus::Exhausted);
        let best = outcome.best.unwrap();
        assert_eq!(best.cost.value(), 10.0);
        assert_eq!(best.solution, vec![0, 1, 2, 3]);
    }

    #[test]
    fn look_ahead_completes_the_root_into_an_incumbent() {
        let mut solver = BnbSolver::new(m4_no_initial(), 5).unwrap();
        let config =
            BnbConfig::new(SelectionStrategy::DepthFirst, BnbType::LookAhead).with_iters(1);
        let outcome = solver.solve(&config).unwrap();
        assert_eq!(outcome.status, BnbStatus::ItersLimit);
        assert_eq!(outcome.stats.pops, 1);
        assert!(outcome.best.is_some());
    }

    #[test]
    fn traditional_run_with_one_pop_has_no_incumbent() {
        let mut solver = BnbSolver::new(m4_no_initial(), 5).unwrap();
        let config =
            BnbConfig::new(SelectionStrategy::DepthFirst, BnbType::Traditional).with_iters(1);
        let outcome = solver.solve(&config).unwrap();
        assert_eq!(outcome.status, BnbStatus::ItersLimit);
        assert!(outcome.best.is_none());
    }

    #[test]
    fn look_ahead_requires_completion_support() {
        struct NoCompletion(TspProblem);
        impl Problem for NoCompletion {
            type Solution = Vec<usize>;
            type Params = CityGraph;
            fn params(&self) -> &CityGraph {
                self.0.params()
            }
            fn cost(&self, s: &Vec<usize>) -> Result<CostValue, crate::problem::ProblemError> {
                self.0.cost(s)
            }
            fn initial_solution(&self) -> Option<Vec<usize>> {
                self.0.initial_solution()
            }
        }
        impl BnbProblem for NoCompletion {
            fn root(&self) -> Vec<usize> {
                self.0.root()
            }
            fn branch(&self, p: &Vec<usize>) -> Vec<Vec<usize>> {
                self.0.branch(p)
            }
            fn lbound(&self, p: &Vec<usize>) -> CostValue {
                self.0.lbound(p)
            }
            fn is_feasible(&self, s: &Vec<usize>) -> bool {
                self.0.is_feasible(s)
            }
        }

        let mut solver = BnbSolver::new(NoCompletion(m4()), 0).unwrap();
        match solver.solve(&BnbConfig::new(
            SelectionStrategy::DepthFirst,
            BnbType::LookAhead,
        )) {
            Err(EngineError::CompletionUnsupported) => {}
            other => panic!(
                "expected CompletionUnsupported, got {:?}",
                other.map(|o| o.status)
            ),
        }
    }

    #[test]
    fn failed_completions_are_tolerated_and_the_node_still_branches() {
        // completion always fails; look-ahead degrades to traditional search
        struct FlakyCompletion(TspProblem);
        impl Problem for FlakyCompletion {
            type Solution = Vec<usize>;
            type Params = CityGraph;
            fn params(&self) -> &CityGraph {
                self.0.params()
            }
            fn cost(&self, s: &Vec<usize>) -> Result<CostValue, crate::problem::ProblemError> {
                self.0.cost(s)
            }
            fn initial_solution(&self) -> Option<Vec<usize>> {
                self.0.initial_solution()
            }
        }
        impl BnbProblem for FlakyCompletion {
            fn root(&self) -> Vec<usize> {
                self.0.root()
            }
            fn branch(&self, p: &Vec<usize>) -> Vec<Vec<usize>> {
                self.0.branch(p)
            }
            fn lbound(&self, p: &Vec<usize>) -> CostValue {
                self.0.lbound(p)
            }
            fn is_feasible(&self, s: &Vec<usize>) -> bool {
                self.0.is_feasible(s)
            }
            fn supports_completion(&self) -> bool {
                true
            }
            fn complete_solution(
                &self,
                _partial: &Vec<usize>,
                _rng: &mut crate::rng::EngineRng,
            ) -> Option<Vec<usize>> {
                None
            }
        }

        let mut solver = BnbSolver::new(FlakyCompletion(m4_no_initial()), 0).unwrap();
        let outcome = solver
            .solve(&BnbConfig::new(
                SelectionStrategy::DepthFirst,
                BnbType::LookAhead,
            ))
            .unwrap();
        assert_eq!(outcome.status, BnbStatus::Exhausted);
        assert_eq!(outcome.best.unwrap().cost.value(), 10.0);
    }

    #[test]
    fn reported_best_cost_equals_recomputed_cost() {
        let mut solver = BnbSolver::new(m4(), 2).unwrap();
        let outcome = solver
            .solve(&BnbConfig::new(
                SelectionStrategy::BestFirstDepthFirst,
                BnbType::LookAhead,
            ))
            .unwrap();
        let best = outcome.best.unwrap();
        let recomputed = m4().cost(&best.solution).unwrap();
        assert_eq!(best.cost.value(), recomputed.value());
    }

    #[test]
    fn pop_count_never_exceeds_the_budget() {
        for limit in [1u64, 2, 5, 17] {
            let mut solver = BnbSolver::new(m4_no_initial(), 1).unwrap();
            let config =
                BnbConfig::new(SelectionStrategy::BestFirstDepthFirst, BnbType::Traditional)
                    .with_iters(limit);
            let outcome = solver.solve(&config).unwrap();
            assert!(outcome.stats.pops <= limit);
        }
    }

    #[test]
    fn fixed_seed_reproduces_the_pop_trace() {
        let run = || {
            let graph = crate::tsp::generate_instance(8, 21, 0.0, 5.0);
            let mut solver =
                BnbSolver::new(TspProblem::with_initial(graph, InitialTour::None), 9).unwrap();
            let config = BnbConfig::new(SelectionStrategy::BestFirstDepthFirst, BnbType::LookAhead)
                .with_iters(200);
            solver.solve(&config).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.stats.trace_hash, b.stats.trace_hash);
        assert_eq!(
            a.best.map(|inc| inc.solution),
            b.best.map(|inc| inc.solution)
        );
    }

    #[test]
    fn depth_first_frontier_stays_linear_in_depth() {
        let graph = crate::tsp::generate_instance(8, 4, 0.0, 5.0);
        let mut solver = BnbSolver::new(TspProblem::new(graph), 0).unwrap();
        let outcome = solver
            .solve(&BnbConfig::new(
                SelectionStrategy::DepthFirst,
                BnbType::Traditional,
            ))
            .unwrap();
        assert_eq!(outcome.status, BnbStatus::Exhausted);
        assert!(
            outcome.stats.peak_frontier <= 9,
            "peak {} exceeds depth bound",
            outcome.stats.peak_frontier
        );
    }

    #[test]
    fn resuming_under_a_different_strategy_is_rejected() {
        let mut solver = BnbSolver::new(m4(), 0).unwrap();
        let df = BnbConfig::new(SelectionStrategy::DepthFirst, BnbType::Traditional).with_iters(2);
        solver.solve(&df).unwrap();
        let befdf = BnbConfig::new(SelectionStrategy::BestFirstDepthFirst, BnbType::Traditional);
        match solver.solve(&befdf) {
            Err(EngineError::StateMismatch(_)) => {}
            other => panic!("expected StateMismatch, got {:?}", other.map(|o| o.status)),
        }
    }

    #[test]
    fn split_run_matches_uninterrupted_run() {
        for strategy in ALL_STRATEGIES {
            let graph = || crate::tsp::generate_instance(6, 13, 0.0, 5.0);
            let config = |iters| BnbConfig::new(strategy, BnbType::LookAhead).with_iters(iters);

            let mut whole = BnbSolver::new(TspProblem::new(graph()), 2).unwrap();
            whole.solve(&config(70)).unwrap();

            let mut first = BnbSolver::new(TspProblem::new(graph()), 2).unwrap();
            first.solve(&config(30)).unwrap();
            let blob = first.state_blob();
            let mut second = BnbSolver::resume_from_blob(TspProblem::new(graph()), &blob).unwrap();
            second.solve(&config(40)).unwrap();

            assert_eq!(
                whole.state_blob(),
                second.state_blob(),
                "state diverged for {strategy:?}"
            );
        }
    }

    #[test]
    fn disabling_pruning_does_not_change_the_exhausted_optimum() {
        let mut pruned = BnbSolver::new(m4(), 0).unwrap();
        let mut config = BnbConfig::new(SelectionStrategy::DepthFirst, BnbType::Traditional);
        let with = pruned.solve(&config).unwrap();
        config.pruning = false;
        let mut unpruned = BnbSolver::new(m4(), 0).unwrap();
        let without = unpruned.solve(&config).unwrap();
        assert_eq!(
            with.best.unwrap().cost.value(),
            without.best.unwrap().cost.value()
        );
        assert!(without.stats.pops >= with.stats.pops);
    }
}
