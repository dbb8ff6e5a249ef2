//! The truncated AoI decision process.
//!
//! States are vectors of per-loop ages in `{1..M}`, indexed densely in
//! mixed radix with loop 0 as the least significant digit. Aging past `M`
//! clamps at `M`: the probability mass that would leave the finite space is
//! folded back onto the clamped state, which keeps the kernel stochastic.
//!
//! Kernels are generated on the fly from `(state, action)` rather than
//! materialized; at the default experiment scale the state space has ~10M
//! states and a stored kernel would dominate memory while each successor
//! list has at most `2^|scheduled|` entries.

use thiserror::Error;

use crate::control::PenaltyTable;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("need 1 <= R <= N, got R={r}, N={n}")]
    ResourceBound { n: usize, r: usize },
    #[error("augmentation level must be >= 1")]
    AugmentationLevel,
    #[error("at most 63 loops supported, got {0}")]
    TooManyLoops(usize),
    #[error("state space {m}^{n} exceeds addressable memory")]
    StateSpaceTooLarge { m: u32, n: usize },
    #[error("expected {expected} loops, got {actual}")]
    LoopCount { expected: usize, actual: usize },
    #[error("age {age} of loop {index} outside 1..={m}")]
    AgeOutOfRange { index: usize, age: u32, m: u32 },
    #[error("state index {idx} outside 0..{count}")]
    IndexOutOfRange { idx: usize, count: usize },
    #[error("action schedules {got} loops, limit is {limit}")]
    ActionTooLarge { got: usize, limit: usize },
    #[error("state has {got} components, network has {expected}")]
    StateLength { expected: usize, got: usize },
}

/// Shared-channel geometry: `N` loops, `R` grants per slot, ages clamped at `M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkConfig {
    n: usize,
    r: usize,
    m: u32,
    /// `m^i` for `i = 0..=n`; `pows[n]` is the state count.
    pows: Vec<usize>,
}

impl NetworkConfig {
    pub fn new(n: usize, r: usize, m: u32) -> Result<Self, ConfigError> {
        if n == 0 || r == 0 || r > n {
            return Err(ConfigError::ResourceBound { n, r });
        }
        if n > 63 {
            return Err(ConfigError::TooManyLoops(n));
        }
        if m == 0 {
            return Err(ConfigError::AugmentationLevel);
        }
        let mut pows = Vec::with_capacity(n + 1);
        let mut acc: usize = 1;
        pows.push(acc);
        for _ in 0..n {
            acc = acc
                .checked_mul(m as usize)
                .ok_or(ConfigError::StateSpaceTooLarge { m, n })?;
            pows.push(acc);
        }
        Ok(Self { n, r, m, pows })
    }

    pub fn loops(&self) -> usize {
        self.n
    }

    pub fn resources(&self) -> usize {
        self.r
    }

    pub fn max_age(&self) -> u32 {
        self.m
    }

    pub fn state_count(&self) -> usize {
        self.pows[self.n]
    }

    /// `M^i`, the weight of loop `i` in the dense index.
    pub fn place_values(&self) -> &[usize] {
        &self.pows[..self.n]
    }
}

/// Vector of per-loop ages. Not clamped: the simulator tracks true ages and
/// only policy lookups clamp to the truncated space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AoiState {
    ages: Vec<u32>,
}

impl AoiState {
    pub fn new(ages: Vec<u32>) -> Self {
        assert!(
            ages.iter().all(|&a| a >= 1),
            "ages start at 1 by construction"
        );
        Self { ages }
    }

    pub fn all_one(n: usize) -> Self {
        Self { ages: vec![1; n] }
    }

    pub fn ages(&self) -> &[u32] {
        &self.ages
    }

    pub fn len(&self) -> usize {
        self.ages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ages.is_empty()
    }

    /// Componentwise `min(age, M)`.
    pub fn clamped(&self, m: u32) -> AoiState {
        AoiState {
            ages: self.ages.iter().map(|&a| a.min(m)).collect(),
        }
    }
}

impl From<&[u32]> for AoiState {
    fn from(ages: &[u32]) -> Self {
        Self::new(ages.to_vec())
    }
}

/// Dense mixed-radix index of a clamped state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateIndex(pub usize);

/// A scheduling decision: the set of loops granted the channel, as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action(u64);

impl Action {
    pub const IDLE: Action = Action(0);

    pub fn from_mask(mask: u64) -> Self {
        Action(mask)
    }

    pub fn from_loops<I: IntoIterator<Item = usize>>(loops: I) -> Self {
        let mut mask = 0;
        for i in loops {
            mask |= 1u64 << i;
        }
        Action(mask)
    }

    pub fn mask(&self) -> u64 {
        self.0
    }

    pub fn schedules(&self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_idle(&self) -> bool {
        self.0 == 0
    }

    pub fn loops(&self) -> impl Iterator<Item = usize> + '_ {
        (0..64).filter(|&i| self.schedules(i))
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_idle() {
            return write!(f, "idle");
        }
        let loops: Vec<String> = self.loops().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", loops.join(","))
    }
}

/// One entry of a successor distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<F> {
    pub next: StateIndex,
    pub prob: F,
}

/// All admissible actions in canonical order: ascending subset size, then
/// ascending bitmask. Index 0 is always the idle action. This order is the
/// tie-breaking order everywhere downstream, including policy files.
pub fn enumerate_actions(config: &NetworkConfig) -> Vec<Action> {
    let n = config.n;
    let mut actions = vec![Action::IDLE];
    let full = 1u64 << n;
    for k in 1..=config.r {
        // Gosper's hack walks k-subsets in ascending mask order.
        let mut mask = (1u64 << k) - 1;
        while mask < full {
            actions.push(Action(mask));
            let low = mask & mask.wrapping_neg();
            let ripple = mask + low;
            mask = (((ripple ^ mask) >> 2) / low) | ripple;
        }
    }
    actions
}

/// Mixed-radix encoding, `idx = Σ_i (age_i - 1) · M^i`.
pub fn encode(state: &AoiState, config: &NetworkConfig) -> Result<StateIndex, ConfigError> {
    if state.len() != config.n {
        return Err(ConfigError::StateLength {
            expected: config.n,
            got: state.len(),
        });
    }
    let mut idx = 0usize;
    for (i, &age) in state.ages().iter().enumerate() {
        if age < 1 || age > config.m {
            return Err(ConfigError::AgeOutOfRange {
                index: i,
                age,
                m: config.m,
            });
        }
        idx += (age - 1) as usize * config.pows[i];
    }
    Ok(StateIndex(idx))
}

pub fn decode(idx: StateIndex, config: &NetworkConfig) -> Result<AoiState, ConfigError> {
    if idx.0 >= config.state_count() {
        return Err(ConfigError::IndexOutOfRange {
            idx: idx.0,
            count: config.state_count(),
        });
    }
    let mut rest = idx.0;
    let m = config.m as usize;
    let ages = (0..config.n)
        .map(|_| {
            let digit = rest % m;
            rest /= m;
            digit as u32 + 1
        })
        .collect();
    Ok(AoiState { ages })
}

/// Successor distribution of `(state, action)`.
///
/// Unscheduled loops age deterministically to `min(age+1, M)`; each
/// scheduled loop independently resets to 1 with its success probability or
/// ages like the rest. Entries are ordered by descending success set and
/// zero-probability outcomes are dropped, so probabilities always sum to 1.
pub fn successors<F: Scalar>(
    state: &AoiState,
    action: Action,
    probs: &[F],
    config: &NetworkConfig,
) -> Result<Vec<Transition<F>>, ConfigError> {
    if probs.len() != config.n {
        return Err(ConfigError::LoopCount {
            expected: config.n,
            actual: probs.len(),
        });
    }
    if action.count() > config.r {
        return Err(ConfigError::ActionTooLarge {
            got: action.count(),
            limit: config.r,
        });
    }
    let aged = encode(&advance_all(state, config.m), config)?;

    // Offset removed from `aged` when loop i resets to age 1 (digit 0).
    let scheduled: Vec<usize> = action.loops().take_while(|&i| i < config.n).collect();
    if action.mask() >> config.n != 0 {
        return Err(ConfigError::StateLength {
            expected: config.n,
            got: 64 - action.mask().leading_zeros() as usize,
        });
    }
    let reset_offsets: Vec<usize> = scheduled
        .iter()
        .map(|&i| (state.ages()[i].min(config.m - 1) as usize) * config.pows[i])
        .collect();

    let mut out: Vec<Transition<F>> = Vec::with_capacity(1 << scheduled.len());
    let full = action.mask();
    let mut success = full;
    loop {
        let mut prob = F::one();
        let mut next = aged.0;
        for (k, &i) in scheduled.iter().enumerate() {
            if success >> i & 1 == 1 {
                prob = prob * probs[i];
                next -= reset_offsets[k];
            } else {
                prob = prob * (F::one() - probs[i]);
            }
        }
        if prob > F::zero() {
            // Duplicate successors only arise when M = 1 collapses reset and
            // aging onto the same state; merge instead of pushing twice.
            match out.iter_mut().find(|t| t.next.0 == next) {
                Some(t) => t.prob = t.prob + prob,
                None => out.push(Transition {
                    next: StateIndex(next),
                    prob,
                }),
            }
        }
        if success == 0 {
            break;
        }
        success = (success - 1) & full;
    }
    Ok(out)
}

fn advance_all(state: &AoiState, m: u32) -> AoiState {
    AoiState {
        ages: state.ages().iter().map(|&a| (a + 1).min(m)).collect(),
    }
}

/// Total estimation-error penalty `Σ_i g_i(age_i)`; action-independent.
pub fn stage_cost_error<F: Scalar>(state: &AoiState, tables: &[PenaltyTable<F>]) -> F {
    state
        .ages()
        .iter()
        .zip(tables)
        .map(|(&age, table)| table.value(age))
        .sum()
}

/// Total age `Σ_i age_i`.
pub fn stage_cost_aoi<F: Scalar>(state: &AoiState) -> F {
    let total: u64 = state.ages().iter().map(|&a| a as u64).sum();
    F::from_u64(total).expect("total age representable")
}
