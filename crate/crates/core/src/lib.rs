//! Generic combinatorial-optimization engines with checkpoint/resume.
//!
//! The crate offers two engines over a shared problem contract:
//!
//! * [`anneal::Annealer`] — simulated annealing with a temperature-controlled
//!   Metropolis acceptance rule and probabilistic random restarts.
//! * [`bnb::BnbSolver`] — branch and bound with three node-selection
//!   strategies, lower-bound pruning, optional initial solutions, and an
//!   optional look-ahead mode that heuristically completes partial solutions.
//!
//! Problems plug in through the [`problem::Problem`] trait plus the
//! engine-specific [`anneal::AnnealProblem`] and [`bnb::BnbProblem`] traits;
//! [`tsp`] ships a complete symmetric traveling-salesman reference problem.
//!
//! Both engines expose their full state (solutions, counters, generator) as
//! a canonical byte blob, and [`store::CheckpointStore`] persists those
//! blobs durably so a run interrupted after any iteration continues
//! bit-exactly where it left off.

pub mod anneal;
pub mod bnb;
pub mod problem;
pub mod rng;
pub mod store;
pub mod tsp;

pub use anneal::{
    accept, default_temperature, AnnealConfig, AnnealOutcome, AnnealProblem, AnnealState, Annealer,
};
pub use bnb::{
    BnbConfig, BnbNode, BnbOutcome, BnbProblem, BnbSolver, BnbState, BnbStats, BnbStatus, BnbType,
    SelectionStrategy,
};
pub use problem::{
    offer_candidate, CostValue, EngineError, EngineState, Incumbent, Problem, ProblemError,
};
pub use rng::EngineRng;
pub use store::{params_match, Checkpoint, CheckpointStore, StoreError};
pub use tsp::{CityGraph, InitialTour, Tour, TspProblem};
