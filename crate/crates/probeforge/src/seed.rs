//! Seed derivation.
//!
//! Every random stream in the harness is a ChaCha8 generator seeded from a
//! 64-bit value obtained by mixing a parent seed with a purpose tag and an
//! index through the SplitMix64 finalizer. Streams for different purposes
//! (test draw, train draw, repetition `r`, ...) therefore never coincide,
//! and results do not depend on scheduling or platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

pub const TAG_REPETITION: u64 = u64::from_le_bytes(*b"rep_____");
pub const TAG_TEST: u64 = u64::from_le_bytes(*b"testdraw");
pub const TAG_TRAIN: u64 = u64::from_le_bytes(*b"traindrw");
pub const TAG_SPEC: u64 = u64::from_le_bytes(*b"specseed");
pub const TAG_WEIGHTS: u64 = u64::from_le_bytes(*b"weights_");
pub const TAG_NOISE: u64 = u64::from_le_bytes(*b"noise___");
pub const TAG_META: u64 = u64::from_le_bytes(*b"chipmeta");
pub const TAG_FM: u64 = u64::from_le_bytes(*b"fmextra_");

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `(parent, tag, index)`.
pub fn derive_seed(parent: u64, tag: u64, index: u64) -> u64 {
    let a = mix64(parent.wrapping_add(GOLDEN_GAMMA));
    let b = mix64(a ^ tag);
    mix64(b.wrapping_add(index.wrapping_mul(GOLDEN_GAMMA)))
}

/// Stable 64-bit digest of a string (first 8 bytes of its SHA-256).
pub fn hash_str(s: &str) -> u64 {
    let digest = Sha256::digest(s.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
