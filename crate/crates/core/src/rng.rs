//! Deterministic random streams.
//!
//! Every stream is a ChaCha8 generator whose seed is the SHA-256 of a
//! domain tag and a tuple of integers, so streams for different trials or
//! different purposes never overlap and never depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

/// Seed bytes for `(tag, words...)`.
pub fn derive_seed(tag: &str, words: &[u64]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update((tag.len() as u64).to_le_bytes());
    hasher.update(tag.as_bytes());
    for w in words {
        hasher.update(w.to_le_bytes());
    }
    hasher.finalize().into()
}

pub fn stream(tag: &str, words: &[u64]) -> SimRng {
    SimRng::from_seed(derive_seed(tag, words))
}
