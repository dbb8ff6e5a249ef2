//! The schedulers the simulator can drive.
//!
//! Table-lookup schedulers (DES, AoIS) answer from a solved [`PolicyTable`];
//! the greedy error scheduler (GES) ranks loops online by `p_i · g_i(age)`;
//! round-robin is the fairness baseline. All of them return admissible
//! actions only.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::control::{LoopModel, PenaltyBuilder};
use crate::mdp::{Action, ConfigError};
use crate::scalar::Scalar;
use crate::solver::{CostKind, PolicyTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchedulerKind {
    Des,
    Aois,
    Ges,
    RoundRobin,
}

impl std::fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SchedulerKind::Des => write!(f, "DES"),
            SchedulerKind::Aois => write!(f, "AoIS"),
            SchedulerKind::Ges => write!(f, "GES"),
            SchedulerKind::RoundRobin => write!(f, "RoundRobin"),
        }
    }
}

/// A scheduling strategy with whatever per-episode state it needs.
///
/// Lookup and greedy decisions depend only on the observed ages; round-robin
/// carries a rotation cursor, and the greedy scheduler may grow its penalty
/// tables, so an instance belongs to a single episode. Instances are cheap
/// to clone (policies are shared behind an `Arc`).
#[derive(Debug, Clone)]
pub struct Scheduler<F: Scalar> {
    kind: SchedulerKind,
    strategy: Strategy<F>,
}

#[derive(Debug, Clone)]
enum Strategy<F: Scalar> {
    Lookup(Arc<PolicyTable>),
    Greedy(Greedy<F>),
    RoundRobin { n: usize, r: usize, cursor: usize },
}

#[derive(Debug, Clone)]
struct Greedy<F: Scalar> {
    builders: Vec<PenaltyBuilder<F>>,
    probs: Vec<F>,
    r: usize,
    /// (loop, score) scratch reused across slots.
    ranking: Vec<(usize, F)>,
}

impl<F: Scalar> Scheduler<F> {
    /// Lookup scheduler; the kind follows the policy's cost (error → DES,
    /// age → AoIS).
    pub fn from_policy(policy: Arc<PolicyTable>) -> Self {
        let kind = match policy.cost_kind() {
            CostKind::Error => SchedulerKind::Des,
            CostKind::Aoi => SchedulerKind::Aois,
        };
        Self {
            kind,
            strategy: Strategy::Lookup(policy),
        }
    }

    /// Greedy error scheduler with penalty tables precomputed up to
    /// `initial_max_age` and grown lazily past it.
    pub fn greedy(
        models: &[LoopModel<F>],
        r: usize,
        initial_max_age: u32,
    ) -> Result<Self, ConfigError> {
        if models.is_empty() || r == 0 || r > models.len() {
            return Err(ConfigError::ResourceBound {
                n: models.len(),
                r,
            });
        }
        let mut builders: Vec<PenaltyBuilder<F>> =
            models.iter().map(PenaltyBuilder::new).collect();
        for b in &mut builders {
            // Overflow here just shortens the table; scores beyond it are
            // treated as infinite, which schedules the loop unconditionally.
            let _ = b.grow_to(initial_max_age.max(1));
        }
        Ok(Self {
            kind: SchedulerKind::Ges,
            strategy: Strategy::Greedy(Greedy {
                probs: models.iter().map(|m| m.success_prob()).collect(),
                ranking: Vec::with_capacity(models.len()),
                builders,
                r,
            }),
        })
    }

    pub fn round_robin(n: usize, r: usize) -> Result<Self, ConfigError> {
        if n == 0 || r == 0 || r > n {
            return Err(ConfigError::ResourceBound { n, r });
        }
        Ok(Self {
            kind: SchedulerKind::RoundRobin,
            strategy: Strategy::RoundRobin { n, r, cursor: 0 },
        })
    }

    pub fn kind(&self) -> SchedulerKind {
        self.kind
    }

    /// Number of loops this scheduler expects to observe.
    pub fn loops(&self) -> usize {
        match &self.strategy {
            Strategy::Lookup(policy) => policy.network().loops(),
            Strategy::Greedy(g) => g.probs.len(),
            Strategy::RoundRobin { n, .. } => *n,
        }
    }

    /// Picks the loops to grant the channel, given the current (unclamped)
    /// ages. The age slice length must match [`Self::loops`].
    pub fn decide(&mut self, ages: &[u32]) -> Action {
        assert_eq!(ages.len(), self.loops(), "age vector length mismatch");
        match &mut self.strategy {
            Strategy::Lookup(policy) => policy.action_for_ages(ages),
            Strategy::Greedy(g) => g.decide(ages),
            Strategy::RoundRobin { n, r, cursor } => {
                let action = Action::from_loops((0..*r).map(|j| (*cursor + j) % *n));
                *cursor = (*cursor + *r) % *n;
                action
            }
        }
    }
}

impl<F: Scalar> Greedy<F> {
    /// Schedules the `R` loops with the largest `p_i · g_i(age_i)`, ties to
    /// the lowest loop index. Scores are non-negative so the greedy
    /// scheduler never idles.
    fn decide(&mut self, ages: &[u32]) -> Action {
        self.ranking.clear();
        for (i, (&age, builder)) in ages.iter().zip(&mut self.builders).enumerate() {
            if builder.values().len() < age as usize {
                let _ = builder.grow_to(age);
            }
            let score = match builder.values().get((age - 1) as usize) {
                Some(&g) => self.probs[i] * g,
                // Penalty overflowed before this age: the true score dwarfs
                // every finite one.
                None => F::infinity(),
            };
            self.ranking.push((i, score));
        }
        self.ranking.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        Action::from_loops(self.ranking.iter().take(self.r).map(|&(i, _)| i))
    }
}
