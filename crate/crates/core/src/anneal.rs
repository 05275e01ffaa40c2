//! Simulated annealing engine.
//!
//! Each iteration first checks the wall clock, then with probability
//! `reset_p` performs a random restart (the reset candidate unconditionally
//! becomes the current solution and the since-reset counter returns to
//! zero); otherwise it proposes a neighbour of the current solution and
//! accepts it under the Metropolis criterion at the temperature for the
//! current since-reset count. Every evaluated solution, resets included, is
//! offered to the incumbent tracker, which only a strict improvement
//! replaces.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::problem::{CostValue, EngineError, EngineState, Problem};
use crate::rng::EngineRng;
use rand::Rng;

/// Default temperature schedule: `4000 / (1 + e^(x/3000))` for `x`
/// iterations since the last restart. Strictly decreasing, always positive,
/// and exactly 2000 at `x = 0`.
pub fn default_temperature(iters_since_reset: u64) -> f64 {
    4000.0 / (1.0 + (iters_since_reset as f64 / 3000.0).exp())
}

/// Metropolis acceptance: improvements and ties (`delta <= 0`) are always
/// accepted; an uphill move is accepted iff `u < e^(-delta/temperature)`,
/// with `u` a uniform variate in `[0, 1)`.
pub fn accept(delta: f64, temperature: f64, u: f64) -> bool {
    delta <= 0.0 || u < (-delta / temperature).exp()
}

/// Problem operations specific to simulated annealing.
pub trait AnnealProblem: Problem {
    /// Proposes a new complete solution by modifying the current one.
    fn next_candidate(&self, current: &Self::Solution, rng: &mut EngineRng) -> Self::Solution;

    /// Solution installed on a random restart. Defaults to the problem's
    /// initial solution; the engine refuses to start without one, so the
    /// default cannot be reached when that contract holds.
    fn reset_candidate(&self, rng: &mut EngineRng) -> Self::Solution {
        let _ = rng;
        self.initial_solution()
            .expect("default reset_candidate requires an initial solution")
    }

    /// Temperature for the given number of iterations since the last
    /// restart. Must be positive.
    fn temperature(&self, iters_since_reset: u64) -> f64 {
        default_temperature(iters_since_reset)
    }
}

/// Per-call annealing budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnealConfig {
    /// Iterations to run in this call. Must be at least 1; continuing a
    /// finished run with a fresh budget is how longer runs are composed.
    pub n_iters: u64,
    /// Per-iteration probability of a random restart, in `[0, 1]`.
    pub reset_p: f64,
    /// Wall-clock budget; `None` means unlimited. Checked before every
    /// iteration, so a run overshoots by at most one iteration's duration.
    pub time_limit: Option<Duration>,
}

impl AnnealConfig {
    pub fn iters(n_iters: u64) -> Self {
        Self {
            n_iters,
            reset_p: 0.0,
            time_limit: None,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.n_iters == 0 {
            return Err(EngineError::InvalidConfig("n_iters must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.reset_p) || self.reset_p.is_nan() {
            return Err(EngineError::InvalidConfig(format!(
                "reset_p must lie in [0, 1], got {}",
                self.reset_p
            )));
        }
        Ok(())
    }
}

/// Complete annealing state: the shared engine state plus the since-reset
/// counter that drives the temperature schedule. Serializes as a single
/// JSON object with `best_cost` at the top level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnealState<S> {
    #[serde(flatten)]
    pub engine: EngineState<S>,
    pub iters_since_reset: u64,
}

/// Result of one `anneal` call.
#[derive(Debug, Clone)]
pub struct AnnealOutcome<S> {
    pub best_solution: S,
    pub best_cost: CostValue,
    /// Iterations actually performed by this call.
    pub iterations: u64,
    pub hit_time_limit: bool,
}

/// Simulated annealing engine bound to one problem instance.
pub struct Annealer<P: AnnealProblem> {
    problem: P,
    state: AnnealState<P::Solution>,
}

impl<P: AnnealProblem> Annealer<P> {
    /// Starts a fresh run from the problem's initial solution. Fails when
    /// the problem provides none: annealing needs a current solution.
    pub fn new(problem: P, seed: u64) -> Result<Self, EngineError> {
        let initial = problem
            .initial_solution()
            .ok_or(EngineError::MissingInitialSolution)?;
        let cost = problem.cost(&initial)?;
        Ok(Self {
            problem,
            state: AnnealState {
                engine: EngineState::new(initial, cost, seed),
                iters_since_reset: 0,
            },
        })
    }

    /// Continues from checkpointed state.
    pub fn resume(problem: P, state: AnnealState<P::Solution>) -> Self {
        Self { problem, state }
    }

    pub fn resume_from_blob(problem: P, blob: &[u8]) -> Result<Self, EngineError> {
        let state = serde_json::from_slice(blob)?;
        Ok(Self::resume(problem, state))
    }

    pub fn problem(&self) -> &P {
        &self.problem
    }

    pub fn state(&self) -> &AnnealState<P::Solution> {
        &self.state
    }

    /// Canonical serialized state for checkpointing.
    pub fn state_blob(&self) -> Vec<u8> {
        serde_json::to_vec(&self.state).expect("anneal state serializes")
    }

    /// Runs up to `config.n_iters` further iterations, stopping early on
    /// the time limit, and returns the incumbent.
    pub fn anneal(
        &mut self,
        config: &AnnealConfig,
    ) -> Result<AnnealOutcome<P::Solution>, EngineError> {
        config.validate()?;
        let started = Instant::now();
        let mut performed = 0u64;
        let mut hit_time_limit = false;

        while performed < config.n_iters {
            if let Some(limit) = config.time_limit {
                if started.elapsed() >= limit {
                    hit_time_limit = true;
                    break;
                }
            }
            self.step(config.reset_p)?;
            performed += 1;
        }

        Ok(AnnealOutcome {
            best_solution: self.state.engine.best_solution.clone(),
            best_cost: self.state.engine.best_cost,
            iterations: performed,
            hit_time_limit,
        })
    }

    /// One iteration: a reset draw, then either a restart or a
    /// propose/accept step. The reset variate is drawn every iteration so
    /// the generator stream does not depend on `reset_p`.
    fn step(&mut self, reset_p: f64) -> Result<(), EngineError> {
        let state = &mut self.state;
        let reset_draw: f64 = state.engine.rng.gen();

        if reset_draw < reset_p {
            let candidate = self.problem.reset_candidate(&mut state.engine.rng);
            let cost = self.problem.cost(&candidate)?;
            state.engine.update_best(&self.problem, &candidate, cost);
            state.engine.current_solution = candidate;
            state.engine.current_cost = cost;
            state.iters_since_reset = 0;
        } else {
            let candidate = self
                .problem
                .next_candidate(&state.engine.current_solution, &mut state.engine.rng);
            let cost = self.problem.cost(&candidate)?;
            state.engine.update_best(&self.problem, &candidate, cost);

            let delta = self.problem.cost_delta(cost, state.engine.current_cost);
            let accepted = if delta <= 0.0 {
                true
            } else {
                let temperature = self.problem.temperature(state.iters_since_reset);
                let u: f64 = state.engine.rng.gen();
                accept(delta, temperature, u)
            };
            if accepted {
                state.engine.current_solution = candidate;
                state.engine.current_cost = cost;
            }
            state.iters_since_reset += 1;
        }
        state.engine.total_iterations += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsp::{CityGraph, InitialTour, TspProblem};

    fn m4() -> TspProblem {
        TspProblem::new(CityGraph::fixture4())
    }

    #[test]
    fn default_temperature_matches_schedule() {
        assert_eq!(default_temperature(0), 2000.0);
        let expected = 4000.0 / (1.0 + std::f64::consts::E);
        assert!((default_temperature(3000) - expected).abs() < 1e-12);
        // sigmoid tail: tiny but positive
        assert!(default_temperature(1_000_000) > 0.0);
    }

    #[test]
    fn default_temperature_is_monotonically_decreasing() {
        let mut prev = default_temperature(0);
        for x in [1u64, 10, 100, 1000, 5000, 50_000, 500_000] {
            let t = default_temperature(x);
            assert!(t < prev, "T({x}) = {t} not below {prev}");
            prev = t;
        }
    }

    #[test]
    fn accept_rule_covers_the_boundary_cases() {
        assert!(accept(-1.0, 123.0, 0.999999));
        assert!(accept(0.0, 1e-9, 0.999999));
        // e^{-ln 2} = 0.5 threshold
        let t = 7.0;
        let delta = t * std::f64::consts::LN_2;
        assert!(accept(delta, t, 0.49));
        assert!(!accept(delta, t, 0.51));
    }

    #[test]
    fn anneal_reaches_the_m4_optimum() {
        let mut annealer = Annealer::new(m4(), 7).unwrap();
        let config = AnnealConfig {
            n_iters: 10_000,
            reset_p: 0.0,
            time_limit: None,
        };
        let outcome = annealer.anneal(&config).unwrap();
        assert_eq!(outcome.best_cost.value(), 10.0);
        assert_eq!(outcome.iterations, 10_000);
    }

    #[test]
    fn same_seed_gives_identical_runs() {
        let config = AnnealConfig {
            n_iters: 2_000,
            reset_p: 0.05,
            time_limit: None,
        };
        let mut a = Annealer::new(m4(), 11).unwrap();
        let mut b = Annealer::new(m4(), 11).unwrap();
        let out_a = a.anneal(&config).unwrap();
        let out_b = b.anneal(&config).unwrap();
        assert_eq!(out_a.best_solution, out_b.best_solution);
        assert_eq!(a.state_blob(), b.state_blob());
    }

    #[test]
    fn zero_time_budget_returns_the_initial_solution() {
        let problem = m4();
        let initial_cost = problem.cost(&problem.initial_solution().unwrap()).unwrap();
        let mut annealer = Annealer::new(problem, 3).unwrap();
        let config = AnnealConfig {
            n_iters: 1_000,
            reset_p: 0.0,
            time_limit: Some(Duration::ZERO),
        };
        let outcome = annealer.anneal(&config).unwrap();
        assert_eq!(outcome.iterations, 0);
        assert!(outcome.hit_time_limit);
        assert_eq!(outcome.best_cost.value(), initial_cost.value());
        assert_eq!(outcome.best_solution, vec![0, 1, 2, 3]);
    }

    #[test]
    fn best_never_exceeds_initial_cost() {
        for seed in 0..5 {
            let problem = m4();
            let initial_cost = problem.cost(&problem.initial_solution().unwrap()).unwrap();
            let mut annealer = Annealer::new(problem, seed).unwrap();
            let outcome = annealer
                .anneal(&AnnealConfig {
                    n_iters: 500,
                    reset_p: 0.1,
                    time_limit: None,
                })
                .unwrap();
            assert!(outcome.best_cost.value() <= initial_cost.value());
        }
    }

    #[test]
    fn reported_best_cost_equals_recomputed_cost() {
        let problem = m4();
        let mut annealer = Annealer::new(problem, 13).unwrap();
        let outcome = annealer
            .anneal(&AnnealConfig {
                n_iters: 300,
                reset_p: 0.05,
                time_limit: None,
            })
            .unwrap();
        let recomputed = m4().cost(&outcome.best_solution).unwrap();
        assert_eq!(outcome.best_cost.value(), recomputed.value());
    }

    #[test]
    fn time_limited_run_stops_promptly() {
        let problem = TspProblem::new(crate::tsp::generate_instance(60, 1, 0.0, 5.0));
        let mut annealer = Annealer::new(problem, 0).unwrap();
        let started = std::time::Instant::now();
        let outcome = annealer
            .anneal(&AnnealConfig {
                n_iters: u64::MAX,
                reset_p: 0.0,
                time_limit: Some(Duration::from_millis(50)),
            })
            .unwrap();
        assert!(outcome.hit_time_limit);
        // generous slack: the bound is one iteration's duration past the limit
        assert!(started.elapsed() < Duration::from_secs(5));
    }

    #[test]
    fn config_validation_rejects_bad_budgets() {
        assert!(AnnealConfig::iters(0).validate().is_err());
        let mut c = AnnealConfig::iters(10);
        c.reset_p = -0.1;
        assert!(c.validate().is_err());
        c.reset_p = 1.5;
        assert!(c.validate().is_err());
        c.reset_p = f64::NAN;
        assert!(c.validate().is_err());
        c.reset_p = 1.0;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn startup_without_initial_solution_is_rejected() {
        let problem = TspProblem::with_initial(CityGraph::fixture4(), InitialTour::None);
        match Annealer::new(problem, 0) {
            Err(EngineError::MissingInitialSolution) => {}
            Err(other) => panic!("expected MissingInitialSolution, got {other:?}"),
            Ok(_) => panic!("expected MissingInitialSolution, got a running engine"),
        }
    }

    #[test]
    fn reset_candidate_defaults_to_the_initial_solution() {
        // a problem that keeps the trait defaults, unlike the TSP override
        struct Defaulted(TspProblem);
        impl crate::problem::Problem for Defaulted {
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
        impl AnnealProblem for Defaulted {
            fn next_candidate(&self, current: &Vec<usize>, rng: &mut EngineRng) -> Vec<usize> {
                crate::tsp::swap_candidate(current, rng)
            }
        }

        let problem = Defaulted(m4());
        let mut rng = crate::rng::seeded(0);
        assert_eq!(problem.reset_candidate(&mut rng), vec![0, 1, 2, 3]);
        assert_eq!(problem.temperature(0), 2000.0);
    }

    #[test]
    fn split_run_matches_uninterrupted_run() {
        let config = |n| AnnealConfig {
            n_iters: n,
            reset_p: 0.02,
            time_limit: None,
        };
        let mut whole = Annealer::new(m4(), 5).unwrap();
        whole.anneal(&config(200)).unwrap();

        let mut first = Annealer::new(m4(), 5).unwrap();
        first.anneal(&config(120)).unwrap();
        let blob = first.state_blob();
        let mut second = Annealer::resume_from_blob(m4(), &blob).unwrap();
        second.anneal(&config(80)).unwrap();

        assert_eq!(whole.state_blob(), second.state_blob());
    }
}
