//! Deterministic seed derivation.
//!
//! A single master seed fans out into independent per-stage seeds so that
//! every stage of a pipeline can be rerun in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for a named stage.
pub fn derive(master: u64, label: &str) -> u64 {
    let mut h = mix64(master);
    for b in label.bytes() {
        h = mix64(h ^ u64::from(b));
    }
    h
}

/// Child seed for an indexed stage (fold, patient, tree, ...).
pub fn derive_index(master: u64, index: u64) -> u64 {
    mix64(mix64(master) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
