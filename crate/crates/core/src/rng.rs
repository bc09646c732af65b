//! Deterministic seed derivation.
//!
//! Every randomized routine takes a `u64` seed and derives independent child
//! streams from it, so results are reproducible bit-for-bit regardless of
//! thread count or evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer. Scrambles a 64-bit value so that nearby inputs
/// (0, 1, 2, ...) yield statistically unrelated outputs.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed of child stream `index` from a master seed.
///
/// Calls nest: `child_seed(child_seed(master, cell), trial)` gives every
/// (cell, trial) pair its own decorrelated stream.
pub fn child_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// Deterministic RNG for child stream `index` of `master`.
pub fn substream(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(master, index))
}
