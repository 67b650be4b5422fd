//! Seeded randomness shared by dataset synthesis, shuffling and weight init.
//!
//! Every stream is a xoshiro256++ generator whose 256-bit state is expanded
//! from a 64-bit seed with SplitMix64 (`SeedableRng::seed_from_u64`). On top
//! of the raw `u64` stream we fix two derived draws so that other
//! implementations can reproduce our datasets exactly:
//!
//! * uniform index in `0..n`: the high 64 bits of the 128-bit product
//!   `next_u64() * n` (one draw, no rejection);
//! * uniform real in `[0, 1)`: `(next_u64() >> 11) * 2^-53`.
//!
//! Shuffles are Fisher-Yates from the last position down to 1, swapping
//! position `i` with `index(i + 1)`.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Rng = Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Stream for a sub-task (epoch, trial, ...) of a seeded job.
pub fn substream(seed: u64, index: u64) -> Rng {
    seeded(seed ^ index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))
}

pub fn index(rng: &mut Rng, n: usize) -> usize {
    debug_assert!(n > 0);
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

pub fn unit(rng: &mut Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}

pub fn shuffle<T>(rng: &mut Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = index(rng, i + 1);
        items.swap(i, j);
    }
}

/// Random permutation of `0..n`.
pub fn permutation(rng: &mut Rng, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    shuffle(rng, &mut order);
    order
}
