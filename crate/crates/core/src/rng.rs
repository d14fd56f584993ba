//! Seeded randomness.
//!
//! Every randomized operation draws from `SplitMix64` (64-bit state,
//! Steele/Lea/Flood 2014 constants) seeded through [`stream`]. Derived
//! streams for trees, folds and bootstrap repeats come from [`mix`], so the
//! result of a parallel computation never depends on scheduling.

use rand::{RngExt, SeedableRng};
pub use rand_xoshiro::SplitMix64;

/// Identifier recorded in artifacts that describe how randomness was drawn.
pub const ALGORITHM: &str = "splitmix64";

/// Derive the seed of sub-stream `index` from a parent seed.
pub fn mix(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// `n` indices drawn uniformly with replacement from `0..n`.
pub fn bootstrap_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = stream(seed);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}
