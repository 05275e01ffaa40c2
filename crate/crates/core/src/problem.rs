//! Problem contract and shared engine state.
//!
//! An optimization problem supplies a cost function, an optional initial
//! solution, and (optionally) a custom cost-difference rule. Engines own an
//! [`EngineState`] tracking the current and best solutions together with the
//! serializable generator, so a run can be checkpointed and resumed without
//! perturbing its trajectory.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::EngineRng;

/// Scalar objective value. Lower is better. Always finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CostValue(f64);

impl CostValue {
    /// Wraps a finite scalar; NaN and infinities are rejected.
    pub fn new(value: f64) -> Result<Self, ProblemError> {
        if value.is_finite() {
            Ok(Self(value))
        } else {
            Err(ProblemError::NonFinite(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for CostValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Error)]
pub enum ProblemError {
    /// A solution handed to a problem operation violated that operation's
    /// preconditions (e.g. an incomplete solution passed to `cost`).
    #[error("contract violation in problem `{problem}`: {detail}")]
    ContractViolation {
        problem: &'static str,
        detail: String,
    },
    #[error("non-finite cost value: {0}")]
    NonFinite(f64),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    /// The problem returned no initial solution but the engine requires one.
    #[error("problem does not provide an initial solution")]
    MissingInitialSolution,
    /// The problem supplied an initial solution that fails its own
    /// feasibility check.
    #[error("initial solution is not feasible")]
    InfeasibleInitialSolution,
    /// Look-ahead branch and bound was requested on a problem that does not
    /// implement solution completion.
    #[error("look-ahead requires the problem to support solution completion")]
    CompletionUnsupported,
    /// A resumed state does not fit the requested configuration (e.g. the
    /// checkpointed frontier was built under a different selection strategy).
    #[error("checkpoint state mismatch: {0}")]
    StateMismatch(String),
    #[error("state decode failed: {0}")]
    StateDecode(#[from] serde_json::Error),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Contract implemented by every optimization problem.
///
/// `cost_delta` defaults to the plain difference of the two values and may
/// be overridden (e.g. to map a lexicographic objective onto a scalar).
/// Overrides must stay sign-consistent with solution quality: the delta is
/// negative exactly when the first cost is strictly better.
///
/// Problems are `Send` so they can move between threads between runs; a
/// single run stays on one thread of control.
pub trait Problem: Send {
    type Solution: Clone + Serialize + DeserializeOwned;
    type Params: Clone + PartialEq + Serialize + DeserializeOwned;

    /// The parameters that define this problem instance. Two runs may share
    /// a checkpoint only when their parameters compare equal.
    fn params(&self) -> &Self::Params;

    /// Objective value of a complete solution. Deterministic and finite.
    fn cost(&self, solution: &Self::Solution) -> Result<CostValue, ProblemError>;

    /// Difference between two cost values; negative means `first` is better.
    fn cost_delta(&self, first: CostValue, second: CostValue) -> f64 {
        first.value() - second.value()
    }

    /// Starting solution, or `None` when the problem cannot supply one.
    /// Branch and bound tolerates `None`; simulated annealing rejects it
    /// at startup.
    fn initial_solution(&self) -> Option<Self::Solution>;
}

/// Best complete feasible solution found so far, with its cost.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Incumbent<S> {
    pub solution: S,
    pub cost: CostValue,
}

/// Offers a candidate to an optional incumbent slot. Only a strict
/// improvement (delta < 0) replaces an existing incumbent; ties keep it.
/// Returns true when the incumbent changed.
pub fn offer_candidate<P: Problem>(
    problem: &P,
    incumbent: &mut Option<Incumbent<P::Solution>>,
    candidate: &P::Solution,
    candidate_cost: CostValue,
) -> bool {
    match incumbent {
        Some(inc) if problem.cost_delta(candidate_cost, inc.cost) >= 0.0 => false,
        _ => {
            *incumbent = Some(Incumbent {
                solution: candidate.clone(),
                cost: candidate_cost,
            });
            true
        }
    }
}

/// Mutable state shared by engine runs: current and best solutions, the
/// lifetime iteration counter, and the generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EngineState<S> {
    pub current_solution: S,
    pub current_cost: CostValue,
    pub best_solution: S,
    pub best_cost: CostValue,
    pub total_iterations: u64,
    #[serde(with = "crate::rng::serde_chacha")]
    pub rng: EngineRng,
}

impl<S: Clone> EngineState<S> {
    /// Fresh state: current and best both start at `solution`.
    pub fn new(solution: S, cost: CostValue, seed: u64) -> Self {
        Self {
            current_solution: solution.clone(),
            current_cost: cost,
            best_solution: solution,
            best_cost: cost,
            total_iterations: 0,
            rng: crate::rng::seeded(seed),
        }
    }

    /// Replaces the best solution iff the candidate strictly improves it.
    /// Never raises `best_cost`. Returns true when the best changed.
    pub fn update_best<P>(&mut self, problem: &P, candidate: &S, candidate_cost: CostValue) -> bool
    where
        P: Problem<Solution = S>,
    {
        if problem.cost_delta(candidate_cost, self.best_cost) < 0.0 {
            self.best_solution = candidate.clone();
            self.best_cost = candidate_cost;
            true
        } else {
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsp::{CityGraph, TspProblem};
    use proptest::prelude::*;

    fn m4_problem() -> TspProblem {
        TspProblem::new(CityGraph::fixture4())
    }

    #[test]
    fn cost_value_rejects_non_finite() {
        assert!(CostValue::new(f64::NAN).is_err());
        assert!(CostValue::new(f64::INFINITY).is_err());
        assert!(CostValue::new(f64::NEG_INFINITY).is_err());
        assert_eq!(CostValue::new(3.5).unwrap().value(), 3.5);
    }

    #[test]
    fn cost_delta_defaults_to_subtraction() {
        let p = m4_problem();
        let c = |v| CostValue::new(v).unwrap();
        assert_eq!(p.cost_delta(c(5.0), c(3.0)), 2.0);
        assert_eq!(p.cost_delta(c(3.0), c(3.0)), 0.0);
        assert_eq!(p.cost_delta(c(1.5), c(4.0)), -2.5);
    }

    #[test]
    fn update_best_takes_strict_improvements_only() {
        let p = m4_problem();
        let c = |v| CostValue::new(v).unwrap();
        let mut state = EngineState::new(vec![0usize, 1, 2, 3], c(10.0), 0);

        // improvement replaces
        assert!(state.update_best(&p, &vec![0, 2, 1, 3], c(8.0)));
        assert_eq!(state.best_cost.value(), 8.0);
        assert_eq!(state.best_solution, vec![0, 2, 1, 3]);

        // tie keeps the incumbent solution
        assert!(!state.update_best(&p, &vec![3, 1, 2, 0], c(8.0)));
        assert_eq!(state.best_solution, vec![0, 2, 1, 3]);

        // worse candidate leaves everything unchanged
        assert!(!state.update_best(&p, &vec![1, 0, 2, 3], c(12.0)));
        assert_eq!(state.best_cost.value(), 8.0);
    }

    #[test]
    fn offer_candidate_fills_empty_slot_and_respects_ties() {
        let p = m4_problem();
        let c = |v| CostValue::new(v).unwrap();
        let mut slot: Option<Incumbent<Vec<usize>>> = None;

        assert!(offer_candidate(&p, &mut slot, &vec![0, 1, 2, 3], c(10.0)));
        assert!(!offer_candidate(&p, &mut slot, &vec![0, 1, 3, 2], c(10.0)));
        assert_eq!(slot.as_ref().unwrap().solution, vec![0, 1, 2, 3]);
        assert!(offer_candidate(&p, &mut slot, &vec![0, 2, 1, 3], c(9.0)));
        assert_eq!(slot.unwrap().cost.value(), 9.0);
    }

    proptest! {
        #[test]
        fn cost_delta_is_antisymmetric(a in -1e9f64..1e9, b in -1e9f64..1e9) {
            let p = m4_problem();
            let (ca, cb) = (CostValue::new(a).unwrap(), CostValue::new(b).unwrap());
            prop_assert_eq!(p.cost_delta(ca, cb), -p.cost_delta(cb, ca));
        }
    }
}
