//! Seeded randomness.
//!
//! Distractor sampling uses a pinned 64-bit linear congruential generator so
//! a selection can be reproduced by hand from its seed:
//!
//! ```text
//! state <- state * 6364136223846793005 + 1442695040888963407   (mod 2^64)
//! output = state >> 32                                          (32 bits)
//! below(n) = output % n
//! ```
//!
//! The initial state is the seed itself and the state is advanced before
//! each output. [`Lcg64::shuffle`] is the descending Fisher-Yates shuffle:
//! for `i` from `len - 1` down to `1`, swap `i` with `below(i + 1)`.
//!
//! Everything else (dataset sampling, weight initialization, epoch order)
//! draws from ChaCha8 streams obtained with [`seeded`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const LCG_MULTIPLIER: u64 = 6_364_136_223_846_793_005;
pub const LCG_INCREMENT: u64 = 1_442_695_040_888_963_407;

#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u32(&mut self) -> u32 {
        self.state = self
            .state
            .wrapping_mul(LCG_MULTIPLIER)
            .wrapping_add(LCG_INCREMENT);
        (self.state >> 32) as u32
    }

    /// Uniform-ish index in `0..n`. `n` must be in `1..=u32::MAX`.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n >= 1 && n as u64 <= u32::MAX as u64);
        (self.next_u32() as u64 % n as u64) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// A ChaCha8 stream for `seed`.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    fnv1a_extend(FNV_OFFSET, bytes)
}

pub(crate) const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub(crate) fn fnv1a_extend(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Derive an independent seed for a named sub-job: `seed ^ fnv1a(label)`.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    seed ^ fnv1a(label.as_bytes())
}
