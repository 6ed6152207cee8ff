//! Seeded random streams.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from a
//! single 64-bit value. Child streams are derived with [`split`], which mixes
//! the parent seed and a stream index through the SplitMix64 finalizer, so a
//! run only ever needs to record one root seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of child stream `index` from `seed`.
pub fn split(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed).wrapping_add(GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1))))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Stream tags used when one seed fans out into several purposes.
pub(crate) mod stream {
    pub const DYNAMICS: u64 = 0;
    pub const VACCINATION: u64 = 1;
    pub const INITIAL_INFECTED: u64 = 2;
    pub const DATASET_SPLIT: u64 = 3;
    pub const GCN_INIT: u64 = 4;
    pub const GRAPH: u64 = 5;
    pub const ENSEMBLE: u64 = 6;
}
