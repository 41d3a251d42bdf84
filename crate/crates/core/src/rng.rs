//! Seed derivation for reproducible, parallel sampling.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from a
//! 64-bit sub-seed. Sub-seeds are derived from a master seed and a stream
//! label with a SplitMix64-style finalizer, so that
//!
//! ```text
//! sub_seed(master, label) = mix(mix(master) ^ fnv1a(label))
//! ```
//!
//! is stable across platforms and independent of evaluation order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derives the sub-seed for a named stream.
pub fn sub_seed(master: u64, label: &str) -> u64 {
    splitmix64(splitmix64(master) ^ fnv1a(label))
}

/// Derives the sub-seed for the `index`-th realization of a sweep.
pub fn indexed_seed(master: u64, label: &str, index: u64) -> u64 {
    splitmix64(sub_seed(master, label) ^ splitmix64(index.wrapping_add(1)))
}

/// Generator for a given sub-seed.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
