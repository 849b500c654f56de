//! Seed derivation for reproducible parallel Monte Carlo.
//!
//! Every replicate draws from its own generator whose seed is a hash of the
//! master seed and the replicate's coordinates, so results do not depend on
//! the order in which a thread pool schedules work.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for replicate `index` of a stream rooted at `master`.
pub fn child_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master) ^ index.wrapping_mul(GOLDEN_GAMMA).rotate_left(17))
}

/// Child seed addressed by a multi-level path, e.g. `[m, trial]`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |acc, &i| child_seed(acc, i))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
