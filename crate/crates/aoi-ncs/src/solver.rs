//! Discounted infinite-horizon value iteration over the truncated process.
//!
//! Sweeps run either Jacobi style (double buffered, deterministic under
//! parallel execution) or Gauss-Seidel style (in place, ascending state
//! index, single-threaded). Stage costs are pluggable: the estimation-error
//! penalty yields the discounted-error scheduler, the plain age sum yields
//! the AoI-optimal scheduler.

use rayon::prelude::*;
use thiserror::Error;

use crate::control::{LoopModel, ModelError};
use crate::mdp::{self, Action, AoiState, ConfigError, NetworkConfig, StateIndex};
use crate::scalar::Scalar;

/// States per parallel work unit. Fixed so Jacobi sweeps partition the index
/// range identically regardless of worker count.
const SWEEP_CHUNK: usize = 1 << 13;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("discount factor must lie in (0, 1), got {0}")]
    Discount(f64),
    #[error("convergence threshold must be positive, got {0}")]
    Threshold(f64),
    #[error("no convergence after {sweeps} sweeps, residual {residual}")]
    NonConvergence { sweeps: usize, residual: f64 },
    #[error("value function overflowed in sweep {sweep}")]
    NonFinite { sweep: usize },
    #[error("{0} admissible actions exceed the policy index range")]
    TooManyActions(usize),
    #[error("loop {index}: {source}")]
    Loop {
        index: usize,
        source: ModelError,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("policy table malformed: {0}")]
    MalformedPolicy(String),
}

/// Sweep discipline for the Bellman updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Read the previous sweep's buffer, write a fresh one.
    Jacobi,
    /// Update in place in ascending state order.
    GaussSeidel,
}

/// Which stage cost the policy minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostKind {
    /// Total estimation-error penalty: the discounted error scheduler (DES).
    Error,
    /// Total age: the AoI-optimal scheduler (AoIS).
    Aoi,
}

impl std::fmt::Display for CostKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CostKind::Error => write!(f, "error"),
            CostKind::Aoi => write!(f, "aoi"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig<F> {
    gamma: F,
    theta: F,
    sweep: SweepMode,
    max_sweeps: usize,
}

impl<F: Scalar> SolverConfig<F> {
    pub fn new(gamma: F, theta: F) -> Result<Self, SolverError> {
        if !(gamma > F::zero() && gamma < F::one()) {
            return Err(SolverError::Discount(to_f64(gamma)));
        }
        if !(theta > F::zero()) {
            return Err(SolverError::Threshold(to_f64(theta)));
        }
        Ok(Self {
            gamma,
            theta,
            sweep: SweepMode::Jacobi,
            max_sweeps: 10_000,
        })
    }

    pub fn with_sweep(mut self, sweep: SweepMode) -> Self {
        self.sweep = sweep;
        self
    }

    pub fn with_max_sweeps(mut self, max_sweeps: usize) -> Self {
        self.max_sweeps = max_sweeps;
        self
    }

    pub fn gamma(&self) -> F {
        self.gamma
    }

    pub fn theta(&self) -> F {
        self.theta
    }

    pub fn sweep(&self) -> SweepMode {
        self.sweep
    }
}

fn to_f64<F: Scalar>(v: F) -> f64 {
    num_traits::ToPrimitive::to_f64(&v).unwrap_or(f64::NAN)
}

/// Dense per-state values, indexed by [`StateIndex`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction<F> {
    values: Vec<F>,
}

impl<F: Scalar> ValueFunction<F> {
    pub fn value(&self, idx: StateIndex) -> F {
        self.values[idx.0]
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Stationary deterministic policy: one action per clamped state.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    net: NetworkConfig,
    cost: CostKind,
    gamma: f64,
    actions: Vec<Action>,
    table: Vec<u16>,
}

impl PolicyTable {
    pub fn from_parts(
        net: NetworkConfig,
        cost: CostKind,
        gamma: f64,
        actions: Vec<Action>,
        table: Vec<u16>,
    ) -> Result<Self, SolverError> {
        if actions.is_empty() {
            return Err(SolverError::MalformedPolicy("empty action list".into()));
        }
        if table.len() != net.state_count() {
            return Err(SolverError::MalformedPolicy(format!(
                "table has {} entries, state space has {}",
                table.len(),
                net.state_count()
            )));
        }
        for action in &actions {
            if action.count() > net.resources() || action.mask() >> net.loops() != 0 {
                return Err(SolverError::MalformedPolicy(format!(
                    "action {action} inadmissible for N={}, R={}",
                    net.loops(),
                    net.resources()
                )));
            }
        }
        if let Some(&bad) = table.iter().find(|&&a| a as usize >= actions.len()) {
            return Err(SolverError::MalformedPolicy(format!(
                "action index {bad} out of range ({} actions)",
                actions.len()
            )));
        }
        Ok(Self {
            net,
            cost,
            gamma,
            actions,
            table,
        })
    }

    pub fn network(&self) -> &NetworkConfig {
        &self.net
    }

    pub fn cost_kind(&self) -> CostKind {
        self.cost
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn action_indices(&self) -> &[u16] {
        &self.table
    }

    pub fn action_at(&self, idx: StateIndex) -> Action {
        self.actions[self.table[idx.0] as usize]
    }

    /// Table lookup for a live (possibly unclamped) age vector.
    ///
    /// Ages beyond the augmentation level are clamped to `M` first; the
    /// policy is defined on the truncated space only.
    pub fn action_for_ages(&self, ages: &[u32]) -> Action {
        assert_eq!(ages.len(), self.net.loops(), "age vector length mismatch");
        let m = self.net.max_age();
        let mut idx = 0usize;
        for (&age, &pow) in ages.iter().zip(self.net.place_values()) {
            idx += (age.min(m) - 1) as usize * pow;
        }
        self.action_at(StateIndex(idx))
    }
}

/// Converged values plus the extracted policy and convergence diagnostics.
#[derive(Debug, Clone)]
pub struct Solution<F> {
    pub values: ValueFunction<F>,
    pub policy: PolicyTable,
    pub sweeps: usize,
    pub final_residual: F,
    /// Max-norm change of every sweep, in order.
    pub residuals: Vec<F>,
}

/// Precomputed tables for evaluating Bellman backups fast.
///
/// Everything a backup needs is arranged per loop/action so the sweep inner
/// loop does no allocation and no decoding beyond an odometer increment.
struct BackupKernel<F> {
    n: usize,
    m: u32,
    pows: Vec<usize>,
    /// Per loop, stage-cost contribution indexed by digit (= age - 1).
    cost_tables: Vec<Vec<F>>,
    /// Per action, the scheduled loops as (loop, p, 1 - p).
    plans: Vec<Vec<(usize, F, F)>>,
    gamma: F,
}

/// Per-worker scratch; holds the reset offsets of the current state.
struct Scratch {
    reset_offsets: Vec<usize>,
}

impl<F: Scalar> BackupKernel<F> {
    fn new(
        loops: &[LoopModel<F>],
        net: &NetworkConfig,
        cost: CostKind,
        gamma: F,
    ) -> Result<Self, SolverError> {
        if loops.len() != net.loops() {
            return Err(ConfigError::LoopCount {
                expected: net.loops(),
                actual: loops.len(),
            }
            .into());
        }
        let m = net.max_age();
        let cost_tables = match cost {
            CostKind::Error => loops
                .iter()
                .enumerate()
                .map(|(index, model)| {
                    model
                        .penalty_table(m)
                        .map(|t| t.values().to_vec())
                        .map_err(|source| SolverError::Loop { index, source })
                })
                .collect::<Result<Vec<_>, _>>()?,
            CostKind::Aoi => {
                let ages: Vec<F> = (1..=m)
                    .map(|a| F::from_u32(a).expect("age representable"))
                    .collect();
                vec![ages; loops.len()]
            }
        };
        let actions = mdp::enumerate_actions(net);
        if actions.len() > u16::MAX as usize + 1 {
            return Err(SolverError::TooManyActions(actions.len()));
        }
        let plans = actions
            .iter()
            .map(|a| {
                a.loops()
                    .take_while(|&i| i < net.loops())
                    .map(|i| {
                        let p = loops[i].success_prob();
                        (i, p, F::one() - p)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            n: net.loops(),
            m,
            pows: net.place_values().to_vec(),
            cost_tables,
            plans,
            gamma,
        })
    }

    fn scratch(&self) -> Scratch {
        Scratch {
            reset_offsets: vec![0; self.n],
        }
    }

    /// One Bellman backup: minimum over actions of C(s) + γ·E[J(s')].
    ///
    /// Ties go to the lowest action index; the stage cost is
    /// action-independent, so only the expectations are compared.
    fn backup(&self, digits: &[u32], values: &[F], scratch: &mut Scratch) -> (F, u16) {
        let mut cost = F::zero();
        let mut aged = 0usize;
        let max_digit = self.m - 1;
        for i in 0..self.n {
            let d = digits[i];
            cost = cost + self.cost_tables[i][d as usize];
            let aged_digit = (d + 1).min(max_digit) as usize;
            let offset = aged_digit * self.pows[i];
            scratch.reset_offsets[i] = offset;
            aged += offset;
        }
        let idle = values[aged];
        let mut best = idle;
        let mut best_action = 0u16;
        for (k, plan) in self.plans.iter().enumerate().skip(1) {
            let exp = match plan.as_slice() {
                [(i, p, q)] => *p * values[aged - scratch.reset_offsets[*i]] + *q * idle,
                scheduled => {
                    let mut exp = F::zero();
                    for bits in 0..(1u32 << scheduled.len()) {
                        let mut prob = F::one();
                        let mut next = aged;
                        for (j, &(i, p, q)) in scheduled.iter().enumerate() {
                            if bits >> j & 1 == 1 {
                                prob = prob * p;
                                next -= scratch.reset_offsets[i];
                            } else {
                                prob = prob * q;
                            }
                        }
                        exp = exp + prob * values[next];
                    }
                    exp
                }
            };
            if exp < best {
                best = exp;
                best_action = k as u16;
            }
        }
        (cost + self.gamma * best, best_action)
    }
}

fn decode_digits(mut idx: usize, m: u32, digits: &mut [u32]) {
    let m = m as usize;
    for d in digits.iter_mut() {
        *d = (idx % m) as u32;
        idx /= m;
    }
}

fn increment_digits(digits: &mut [u32], m: u32) {
    for d in digits.iter_mut() {
        if *d + 1 < m {
            *d += 1;
            return;
        }
        *d = 0;
    }
}

/// One parallel Jacobi sweep; returns the max-norm change.
fn jacobi_sweep<F: Scalar>(kernel: &BackupKernel<F>, values: &[F], out: &mut [F]) -> F {
    out.par_chunks_mut(SWEEP_CHUNK)
        .enumerate()
        .map(|(chunk_idx, chunk)| {
            let start = chunk_idx * SWEEP_CHUNK;
            let mut digits = vec![0u32; kernel.n];
            decode_digits(start, kernel.m, &mut digits);
            let mut scratch = kernel.scratch();
            let mut residual = F::zero();
            for (k, slot) in chunk.iter_mut().enumerate() {
                let (v, _) = kernel.backup(&digits, values, &mut scratch);
                let change = num_traits::Float::abs(v - values[start + k]);
                if change > residual {
                    residual = change;
                }
                *slot = v;
                increment_digits(&mut digits, kernel.m);
            }
            residual
        })
        .reduce(F::zero, |a, b| if a > b { a } else { b })
}

/// One in-place Gauss-Seidel sweep in ascending state order.
fn gauss_seidel_sweep<F: Scalar>(kernel: &BackupKernel<F>, values: &mut [F]) -> F {
    let mut digits = vec![0u32; kernel.n];
    let mut scratch = kernel.scratch();
    let mut residual = F::zero();
    for idx in 0..values.len() {
        let (v, _) = kernel.backup(&digits, values, &mut scratch);
        let change = num_traits::Float::abs(v - values[idx]);
        if change > residual {
            residual = change;
        }
        values[idx] = v;
        increment_digits(&mut digits, kernel.m);
    }
    residual
}

/// Greedy policy from a converged value function (one extra backup pass).
fn extract_policy<F: Scalar>(kernel: &BackupKernel<F>, values: &[F]) -> Vec<u16> {
    let mut table = vec![0u16; values.len()];
    table
        .par_chunks_mut(SWEEP_CHUNK)
        .enumerate()
        .for_each(|(chunk_idx, chunk)| {
            let start = chunk_idx * SWEEP_CHUNK;
            let mut digits = vec![0u32; kernel.n];
            decode_digits(start, kernel.m, &mut digits);
            let mut scratch = kernel.scratch();
            for slot in chunk.iter_mut() {
                let (_, a) = kernel.backup(&digits, values, &mut scratch);
                *slot = a;
                increment_digits(&mut digits, kernel.m);
            }
        });
    table
}

/// Single Bellman backup of one state, for inspection and tests.
///
/// Returns the backed-up value and the index of the minimizing action in
/// canonical order. Sweep loops use the same arithmetic via a precomputed
/// kernel; this entry point rebuilds the tables on every call.
pub fn bellman_backup<F: Scalar>(
    state: &AoiState,
    values: &ValueFunction<F>,
    loops: &[LoopModel<F>],
    net: &NetworkConfig,
    cost: CostKind,
    gamma: F,
) -> Result<(F, usize), SolverError> {
    let kernel = BackupKernel::new(loops, net, cost, gamma)?;
    let idx = mdp::encode(state, net)?;
    let mut digits = vec![0u32; kernel.n];
    decode_digits(idx.0, kernel.m, &mut digits);
    let mut scratch = kernel.scratch();
    let (v, a) = kernel.backup(&digits, values.values(), &mut scratch);
    Ok((v, a as usize))
}

/// Value iteration from `J ≡ 0` until the max-norm sweep change drops to
/// the configured threshold, then greedy policy extraction.
pub fn value_iteration<F: Scalar>(
    loops: &[LoopModel<F>],
    net: &NetworkConfig,
    cost: CostKind,
    solver: &SolverConfig<F>,
) -> Result<Solution<F>, SolverError> {
    let kernel = BackupKernel::new(loops, net, cost, solver.gamma)?;
    let state_count = net.state_count();
    let mut values = vec![F::zero(); state_count];
    let mut residuals = Vec::new();
    let mut sweeps = 0usize;
    let mut residual;

    match solver.sweep {
        SweepMode::Jacobi => {
            let mut next = vec![F::zero(); state_count];
            loop {
                residual = jacobi_sweep(&kernel, &values, &mut next);
                std::mem::swap(&mut values, &mut next);
                sweeps += 1;
                residuals.push(residual);
                if !num_traits::Float::is_finite(residual) {
                    return Err(SolverError::NonFinite { sweep: sweeps });
                }
                if residual <= solver.theta {
                    break;
                }
                if sweeps >= solver.max_sweeps {
                    return Err(SolverError::NonConvergence {
                        sweeps,
                        residual: to_f64(residual),
                    });
                }
            }
        }
        SweepMode::GaussSeidel => loop {
            residual = gauss_seidel_sweep(&kernel, &mut values);
            sweeps += 1;
            residuals.push(residual);
            if !num_traits::Float::is_finite(residual) {
                return Err(SolverError::NonFinite { sweep: sweeps });
            }
            if residual <= solver.theta {
                break;
            }
            if sweeps >= solver.max_sweeps {
                return Err(SolverError::NonConvergence {
                    sweeps,
                    residual: to_f64(residual),
                });
            }
        },
    }

    let table = extract_policy(&kernel, &values);
    let actions = mdp::enumerate_actions(net);
    let policy = PolicyTable::from_parts(net.clone(), cost, to_f64(solver.gamma), actions, table)?;
    Ok(Solution {
        values: ValueFunction { values },
        policy,
        sweeps,
        final_residual: residual,
        residuals,
    })
}
