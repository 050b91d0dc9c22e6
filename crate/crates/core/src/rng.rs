//! Seed derivation for reproducible random streams.
//!
//! All randomness comes from ChaCha8 generators. A sub-task never shares a
//! generator with another sub-task: it gets its own stream, seeded by mixing
//! the parent seed with a text label and an index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Derives a child seed from `(seed, label, index)`.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    let a = splitmix64(seed ^ fnv1a(label));
    splitmix64(a ^ splitmix64(index.wrapping_add(GOLDEN_GAMMA)))
}

/// Generator for the sub-stream `(seed, label, index)`.
pub fn stream(seed: u64, label: &str, index: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, label, index))
}
