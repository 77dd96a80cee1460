//! Seeded random streams.
//!
//! Every stream is a xoshiro256++ generator whose 256-bit state is filled by
//! SplitMix64 from a 64-bit seed (the reference seeding procedure of both
//! generators). Independent substreams, e.g. one per bootstrap draw, use the
//! seed `seed ^ ((index + 1) * 0x9E3779B97F4A7C15)` (wrapping), so the output
//! does not depend on how work is scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Stream = Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn stream(seed: u64) -> Stream {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn substream(seed: u64, index: u64) -> Stream {
    stream(seed ^ index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))
}

/// First output of substream `index`, for handing a seed to per-item work.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    substream(seed, index).next_u64()
}

/// Uniform index in `0..n` by the multiply-high method: `(x * n) >> 64`.
pub fn uniform_index(rng: &mut impl RngCore, n: usize) -> usize {
    debug_assert!(n > 0);
    ((u128::from(rng.next_u64()) * n as u128) >> 64) as usize
}
