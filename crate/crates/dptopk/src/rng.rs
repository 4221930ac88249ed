//! Deterministic derivation of independent RNG streams.
//!
//! Every randomized entry point takes a caller-supplied RNG. Trial runners
//! derive one stream per work unit from `(seed, tags...)` so results are
//! reproducible regardless of execution order or parallelism.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// An independent, reproducible stream for the given seed and tag tuple.
pub fn stream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = splitmix64(seed);
    for &tag in tags {
        state = splitmix64(state ^ tag);
    }
    ChaCha8Rng::seed_from_u64(state)
}
