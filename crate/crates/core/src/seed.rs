//! Stable sub-seed derivation.
//!
//! Sub-seeds depend only on the parent seed and an identity path (for example
//! `["link", "A", "B"]`), never on iteration or thread order.

use sha2::{Digest, Sha256};

/// Derives a child seed from `seed` and an identity path.
pub fn derive(seed: u64, path: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for part in path {
        // length prefix keeps ["ab", "c"] and ["a", "bc"] apart
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Derives a child seed from `seed`, a tag and an integer index.
pub fn derive_indexed(seed: u64, tag: &str, index: u64) -> u64 {
    derive(seed, &[tag, &index.to_string()])
}
