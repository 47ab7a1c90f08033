//! Seed derivation for reproducible parallel simulation.
//!
//! Every sample and every trial owns a ChaCha8 stream keyed by a tuple of
//! integers (master seed, curve id, grid index, trial index, ...). Work can
//! therefore be scheduled on any number of threads without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `parts` into `seed`. Order matters: `(1, 2)` and `(2, 1)` differ.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream_rng(seed: u64, parts: &[u64]) -> SimRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, parts))
}

/// Stable 64-bit tag for a string label (FNV-1a), used to key curves by name.
pub fn label_tag(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}
