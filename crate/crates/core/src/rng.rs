//! Seeded randomness. Every random draw in the crate goes through ChaCha8,
//! whose output stream is fixed by its specification and identical on every
//! platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives a child seed: first 8 bytes (little-endian) of
/// SHA-256 over `base_seed` and the `|`-joined parts.
pub fn derive_seed(base_seed: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    for p in parts {
        h.update(b"|");
        h.update(p.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
