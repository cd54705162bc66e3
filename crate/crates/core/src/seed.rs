//! Deterministic RNG streams. Every random choice in the crate draws from a
//! ChaCha8 stream whose seed is derived from the user seed plus a path of
//! stream indices (fold, grid point, tree, ...), so results never depend on
//! thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mixes `path` into `seed`.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &part| splitmix64(acc ^ splitmix64(part)))
}

pub fn rng(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, path))
}

/// Stream tags, so that different consumers of the same seed never collide.
pub(crate) mod stream {
    pub const FOLDS: u64 = 1;
    pub const BALANCE: u64 = 2;
    pub const GRID: u64 = 3;
    pub const FIT: u64 = 4;
    pub const SYNTHETIC: u64 = 5;
}
