//! Seed derivation and the project-wide PRNG.
//!
//! All randomness flows from a single `u64` run seed. Streams are ChaCha8
//! (the `rand_chacha` construction) keyed by 32 bytes produced from four
//! successive SplitMix64 outputs of the stream seed, so any implementation
//! with ChaCha8 and SplitMix64 reproduces the same streams. Substreams are
//! derived by hashing the parent seed with a tuple of tags, never by
//! sharing a generator between tasks.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// The SplitMix64 output function.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold `tags` into `seed`, one SplitMix64 round per tag.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut state = seed;
    let mut out = splitmix64(&mut state);
    for &tag in tags {
        state = out ^ tag.wrapping_mul(GOLDEN_GAMMA);
        out = splitmix64(&mut state);
    }
    out
}

pub fn seeded_rng(seed: u64) -> Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Uniform integer in `0..bound` by Lemire's multiply-shift (no rejection;
/// the bias is below 2^-32 for every bound this crate uses).
pub fn below(rng: &mut Rng, bound: u64) -> u64 {
    ((rng.next_u64() as u128 * bound as u128) >> 64) as u64
}

/// Uniform real in `[0, 1)` from the top 53 bits of one draw.
pub fn unit_f64(rng: &mut Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// In-place Fisher–Yates: for `i` from `n-1` down to 1, swap `i` with
/// `below(i + 1)`.
pub fn fisher_yates<T>(items: &mut [T], rng: &mut Rng) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}
