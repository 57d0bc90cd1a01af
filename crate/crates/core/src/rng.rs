//! The single seeded PRNG used by every random decision in the arena.
//!
//! Draws come from xoshiro256** seeded through SplitMix64. Bounded integers
//! use modulo-rejection sampling and shuffles are a descending Fisher-Yates,
//! so any implementation of those three pieces reproduces our logs.
//!
//! Sub-seeds are derived with SHA-256 over a fixed domain tag, a label, and
//! the little-endian bytes of the parent seed and an index; the first eight
//! digest bytes (little-endian) form the child seed.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use sha2::{Digest, Sha256};

/// Name recorded in every log header.
pub const PRNG_NAME: &str = "xoshiro256**(splitmix64-seeded)+fisher-yates";

const DERIVE_DOMAIN: &[u8] = b"dixit-arena/seed/v1";

#[derive(Clone, Debug)]
pub struct GameRng(Xoshiro256StarStar);

impl GameRng {
    pub fn from_seed(seed: u64) -> Self {
        Self(Xoshiro256StarStar::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform integer in `0..bound`. Panics on `bound == 0`.
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "bound must be positive");
        let bound = bound as u64;
        // 2^64 mod bound; values under it would bias the low residues
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return (x % bound) as usize;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// Derive an independent child seed from `parent`, a purpose label and an index.
pub fn derive_seed(parent: u64, label: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(DERIVE_DOMAIN);
    hasher.update([0u8]);
    hasher.update(label.as_bytes());
    hasher.update([0u8]);
    hasher.update(parent.to_le_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
