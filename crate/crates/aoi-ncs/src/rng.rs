//! Seed derivation for reproducible parallel experiments.
//!
//! Every episode draws from streams derived deterministically from the
//! master seed, so results do not depend on scheduling order or worker
//! count, and every loop gets separate noise and channel streams, so the
//! same master seed produces the same disturbances under every scheduler
//! (paired comparisons).

/// SplitMix64 output function.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `stream` under `parent`.
pub fn derive_seed(parent: u64, stream: u64) -> u64 {
    splitmix64(parent ^ splitmix64(stream))
}
