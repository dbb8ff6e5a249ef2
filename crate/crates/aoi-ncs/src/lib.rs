//! Scheduler synthesis and evaluation for multi-loop networked control
//! systems sharing a lossy wireless channel.
//!
//! The crate models the shared-channel scheduling problem as a finite
//! decision process over the vector of per-loop information ages, solves it
//! by discounted value iteration into stationary lookup policies, and
//! evaluates those policies (against greedy-error and round-robin
//! baselines) in a seeded Monte Carlo co-simulation of the control loops
//! and the erasure channel.
//!
//! Modules:
//! - [`control`]: LTI loop models, age penalties, per-loop simulation state.
//! - [`mdp`]: truncated age state space, actions, transition kernel, costs.
//! - [`solver`]: value iteration and policy tables.
//! - [`schedulers`]: DES/AoIS lookup, greedy error, round-robin.
//! - [`sim`]: episode and Monte Carlo simulation with confidence intervals.
//!
//! All numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the `*64` aliases below are the concrete types most callers want.

pub mod control;
pub mod mdp;
pub mod rng;
pub mod scalar;
pub mod schedulers;
pub mod sim;
pub mod solver;

pub use control::{LoopModel, LoopSimState, ModelError, PenaltyBuilder, PenaltyTable};
pub use mdp::{Action, AoiState, ConfigError, NetworkConfig, StateIndex, Transition};
pub use scalar::Scalar;
pub use schedulers::{Scheduler, SchedulerKind};
pub use sim::{
    InitialAoi, Metrics, RunSummary, SimConfig, SimError, SimMode, SlotOutcome, SummaryStat,
};
pub use solver::{
    bellman_backup, value_iteration, CostKind, PolicyTable, Solution, SolverConfig, SolverError,
    SweepMode, ValueFunction,
};

/// Double-precision aliases.
pub type LoopModel64 = control::LoopModel<f64>;
pub type PenaltyTable64 = control::PenaltyTable<f64>;
pub type LoopSimState64 = control::LoopSimState<f64>;
pub type Transition64 = mdp::Transition<f64>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type ValueFunction64 = solver::ValueFunction<f64>;
pub type Solution64 = solver::Solution<f64>;
pub type Scheduler64 = schedulers::Scheduler<f64>;
pub type Metrics64 = sim::Metrics<f64>;
pub type RunSummary64 = sim::RunSummary<f64>;
pub type SummaryStat64 = sim::SummaryStat<f64>;
