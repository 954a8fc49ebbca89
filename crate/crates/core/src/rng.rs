//! Seed derivation shared by samplers and adversaries.
//!
//! Every random draw in the crate comes from a ChaCha8 stream selected by
//! `(seed, stream)`. Reward draws for a tuple live on their own stream so two
//! games with identical dynamics, sampled under one seed, see the same uniform
//! variate at every tuple. That is what couples the hard-instance pairs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream reserved for trajectory draws (actions and transitions).
pub const TRAJECTORY_STREAM: u64 = 0;
/// Stream reserved for dataset slicing.
pub const SPLIT_STREAM: u64 = 1;
/// Stream reserved for adversary choices.
pub const ADVERSARY_STREAM: u64 = 2;
/// Stream reserved for estimator randomization.
pub const ESTIMATOR_STREAM: u64 = 3;
const REWARD_STREAM_BASE: u64 = 1 << 32;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Reward stream for the tuple at flat position `index = tau * H + h`.
pub fn reward_rng(seed: u64, index: u64) -> ChaCha8Rng {
    stream_rng(seed, REWARD_STREAM_BASE + index)
}

/// Mixes a base seed with a cell coordinate, for sweeps that need one
/// independent seed per cell.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
