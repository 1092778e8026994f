//! Seeded random streams.
//!
//! Every stochastic routine takes an injected generator. Independent
//! streams (one per repetition, step, worker or posterior sample) are
//! derived from a base seed by folding the stream path through SplitMix64:
//!
//! ```text
//! key = splitmix64(seed); for id in path { key = splitmix64(key ^ splitmix64(id)) }
//! ```
//!
//! and seeding a `ChaCha8Rng` with the resulting key. The scheme is fixed;
//! changing it changes every reproducible output.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the key for the stream `path` under `seed`.
pub fn stream_key(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |key, &id| splitmix64(key ^ splitmix64(id)))
}

/// Generator for the stream `path` under `seed`.
pub fn stream(seed: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(stream_key(seed, path))
}

/// Draws a fresh seed from `rng`, used to fork child streams.
pub fn fork_seed<R: RngCore + ?Sized>(rng: &mut R) -> u64 {
    rng.next_u64()
}
