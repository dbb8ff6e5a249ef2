//! Discrete-time Monte Carlo co-simulation of loops, channel and scheduler.
//!
//! Each slot: the scheduler observes the true (unclamped) ages and picks an
//! action, channel coins and process noise are drawn, metrics accumulate
//! the pre-update state, then every loop advances one slot. A packet sent
//! in slot `t` is delivered (or lost) at `t+1`, so a success resets the age
//! to 1, never 0.

use rand::distr::StandardUniform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::control::{LoopModel, LoopSimState, ModelError};
use crate::mdp::{Action, ConfigError, NetworkConfig};
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::schedulers::Scheduler;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("custom initial ages require error-recursion mode")]
    FullStateCustomAge,
    #[error("initial age vector has {got} entries, network has {expected}")]
    InitialAgeLength { expected: usize, got: usize },
    #[error("initial ages start at 1, got {age} for loop {index}")]
    InitialAgeZero { index: usize, age: u32 },
}

/// How per-loop dynamics are simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Propagate the estimation error directly (default).
    ErrorRecursion,
    /// Simulate plant, estimator and controller; validates the recursion.
    FullState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialAoi {
    AllOne,
    Custom(Vec<u32>),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub slots: usize,
    pub reps: usize,
    pub seed: u64,
    pub initial_aoi: InitialAoi,
    pub mode: SimMode,
}

impl SimConfig {
    pub fn new(slots: usize, reps: usize, seed: u64) -> Self {
        assert!(slots >= 1 && reps >= 1);
        Self {
            slots,
            reps,
            seed,
            initial_aoi: InitialAoi::AllOne,
            mode: SimMode::ErrorRecursion,
        }
    }

    pub fn with_mode(mut self, mode: SimMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_initial_aoi(mut self, initial: InitialAoi) -> Self {
        self.initial_aoi = initial;
        self
    }
}

/// What happened on the channel in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotOutcome {
    pub scheduled: Action,
    /// Deliveries as a bitmask; always a subset of `scheduled` (an
    /// unscheduled loop cannot deliver).
    delivered: u64,
}

impl SlotOutcome {
    /// Delivery indicator for loop `i`; `None` if it was not scheduled.
    pub fn delivered(&self, i: usize) -> Option<bool> {
        self.scheduled
            .schedules(i)
            .then_some(self.delivered >> i & 1 == 1)
    }

    pub fn delivered_mask(&self) -> u64 {
        self.delivered
    }
}

/// Per-episode averages.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics<F> {
    /// Average squared estimation error per slot and loop.
    pub avg_error: F,
    /// Average age per slot and loop.
    pub avg_aoi: F,
    /// Fraction of slots each loop was granted the channel.
    pub shares: Vec<F>,
    /// Average squared error per slot, per loop.
    pub per_loop_error: Vec<F>,
}

/// Mean, sample standard deviation and 95% normal CI half-width over reps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStat<F> {
    pub mean: F,
    pub std_dev: F,
    pub ci95: F,
}

/// Monte Carlo aggregate of per-episode [`Metrics`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary<F> {
    pub reps: usize,
    pub avg_error: SummaryStat<F>,
    pub avg_aoi: SummaryStat<F>,
    pub shares: Vec<SummaryStat<F>>,
    pub per_loop_error: Vec<SummaryStat<F>>,
}

/// Runs one episode and returns its metrics.
pub fn run_episode<F: Scalar>(
    scheduler: &mut Scheduler<F>,
    loops: &[LoopModel<F>],
    net: &NetworkConfig,
    sim: &SimConfig,
    episode_seed: u64,
) -> Result<Metrics<F>, SimError>
where
    StandardNormal: Distribution<F>,
    StandardUniform: Distribution<F>,
{
    run_episode_observed(scheduler, loops, net, sim, episode_seed, |_, _, _, _| {})
}

/// Like [`run_episode`] but hands every slot's pre-update view (outcome,
/// ages, squared errors) to the observer. Tests use this to check the age
/// and error laws along whole trajectories.
pub fn run_episode_observed<F, O>(
    scheduler: &mut Scheduler<F>,
    loops: &[LoopModel<F>],
    net: &NetworkConfig,
    sim: &SimConfig,
    episode_seed: u64,
    mut observe: O,
) -> Result<Metrics<F>, SimError>
where
    F: Scalar,
    O: FnMut(usize, &SlotOutcome, &[u32], &[F]),
    StandardNormal: Distribution<F>,
    StandardUniform: Distribution<F>,
{
    let n = net.loops();
    if loops.len() != n {
        return Err(ConfigError::LoopCount {
            expected: n,
            actual: loops.len(),
        }
        .into());
    }
    if scheduler.loops() != n {
        return Err(ConfigError::LoopCount {
            expected: n,
            actual: scheduler.loops(),
        }
        .into());
    }
    let initial_ages: Vec<u32> = match &sim.initial_aoi {
        InitialAoi::AllOne => vec![1; n],
        InitialAoi::Custom(ages) => {
            if ages.len() != n {
                return Err(SimError::InitialAgeLength {
                    expected: n,
                    got: ages.len(),
                });
            }
            if let Some((index, &age)) = ages.iter().enumerate().find(|&(_, &a)| a < 1) {
                return Err(SimError::InitialAgeZero { index, age });
            }
            if sim.mode == SimMode::FullState && ages.iter().any(|&a| a != 1) {
                return Err(SimError::FullStateCustomAge);
            }
            ages.clone()
        }
    };

    // Streams: one noise and one channel stream per loop, both independent
    // of the scheduler's choices.
    let mut noise_rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|i| ChaCha8Rng::seed_from_u64(derive_seed(episode_seed, 2 * i as u64)))
        .collect();
    let mut chan_rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|i| ChaCha8Rng::seed_from_u64(derive_seed(episode_seed, 2 * i as u64 + 1)))
        .collect();

    let mut states: Vec<LoopSimState<F>> = loops
        .iter()
        .enumerate()
        .map(|(i, model)| {
            let e0 = model.sample_noise(&mut noise_rngs[i]);
            match sim.mode {
                SimMode::ErrorRecursion => LoopSimState::from_error(e0, initial_ages[i]),
                SimMode::FullState => LoopSimState::full_state(model, e0),
            }
        })
        .collect();
    let mut ages = initial_ages;

    let slots_f = F::from_usize(sim.slots).expect("slot count representable");
    let n_f = F::from_usize(n).expect("loop count representable");
    let mut err_acc = vec![F::zero(); n];
    let mut age_acc: u64 = 0;
    let mut share_count = vec![0u64; n];
    let mut sq_scratch = vec![F::zero(); n];

    for t in 0..sim.slots {
        let action = scheduler.decide(&ages);

        let mut delivered = 0u64;
        for (i, model) in loops.iter().enumerate() {
            // Coins are drawn every slot for every loop, scheduled or not,
            // so the channel stream does not depend on the schedule.
            let coin: F = chan_rngs[i].sample(StandardUniform);
            if action.schedules(i) && coin < model.success_prob() {
                delivered |= 1 << i;
            }
        }
        let outcome = SlotOutcome {
            scheduled: action,
            delivered,
        };

        for i in 0..n {
            sq_scratch[i] = states[i].squared_error();
            err_acc[i] = err_acc[i] + sq_scratch[i];
            age_acc += ages[i] as u64;
            if action.schedules(i) {
                share_count[i] += 1;
            }
        }
        observe(t, &outcome, &ages, &sq_scratch);

        for (i, model) in loops.iter().enumerate() {
            let w = model.sample_noise(&mut noise_rngs[i]);
            let received = delivered >> i & 1 == 1;
            match sim.mode {
                SimMode::ErrorRecursion => states[i].step_error(model.dynamics(), &w, received),
                SimMode::FullState => states[i].step_full_state(model, &w, received)?,
            }
            ages[i] = states[i].age();
        }
    }

    let per_loop_error: Vec<F> = err_acc.iter().map(|&e| e / slots_f).collect();
    let total_err: F = err_acc.iter().copied().sum();
    Ok(Metrics {
        avg_error: total_err / (slots_f * n_f),
        avg_aoi: F::from_u64(age_acc).expect("age sum representable") / (slots_f * n_f),
        shares: share_count
            .iter()
            .map(|&c| F::from_u64(c).expect("share count representable") / slots_f)
            .collect(),
        per_loop_error,
    })
}

/// Runs `reps` episodes in parallel and aggregates them.
///
/// Episode seeds derive from `(seed, rep)`, so the summary is reproducible
/// bit for bit for a fixed seed and rep count, regardless of worker count
/// or completion order.
pub fn run_monte_carlo<F: Scalar>(
    scheduler: &Scheduler<F>,
    loops: &[LoopModel<F>],
    net: &NetworkConfig,
    sim: &SimConfig,
) -> Result<RunSummary<F>, SimError>
where
    StandardNormal: Distribution<F>,
    StandardUniform: Distribution<F>,
{
    let metrics: Vec<Metrics<F>> = (0..sim.reps)
        .into_par_iter()
        .map(|rep| {
            let mut episode_scheduler = scheduler.clone();
            let episode_seed = derive_seed(sim.seed, rep as u64);
            run_episode(&mut episode_scheduler, loops, net, sim, episode_seed)
        })
        .collect::<Result<_, _>>()?;
    Ok(summarize(&metrics, net.loops()))
}

fn summarize<F: Scalar>(metrics: &[Metrics<F>], n: usize) -> RunSummary<F> {
    let reps = metrics.len();
    RunSummary {
        reps,
        avg_error: stat(metrics.iter().map(|m| m.avg_error)),
        avg_aoi: stat(metrics.iter().map(|m| m.avg_aoi)),
        shares: (0..n)
            .map(|i| stat(metrics.iter().map(|m| m.shares[i])))
            .collect(),
        per_loop_error: (0..n)
            .map(|i| stat(metrics.iter().map(|m| m.per_loop_error[i])))
            .collect(),
    }
}

fn stat<F: Scalar>(samples: impl Iterator<Item = F> + Clone) -> SummaryStat<F> {
    let count = samples.clone().count();
    let count_f = F::from_usize(count).expect("rep count representable");
    let mean = samples.clone().fold(F::zero(), |a, b| a + b) / count_f;
    if count < 2 {
        return SummaryStat {
            mean,
            std_dev: F::zero(),
            ci95: F::zero(),
        };
    }
    let ss = samples.fold(F::zero(), |acc, x| acc + (x - mean) * (x - mean));
    let std_dev = num_traits::Float::sqrt(ss / (count_f - F::one()));
    let z = F::from_config(1.96);
    SummaryStat {
        mean,
        std_dev,
        ci95: z * std_dev / num_traits::Float::sqrt(count_f),
    }
}
