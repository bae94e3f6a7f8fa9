//! Seed derivation: a master seed fans out into independent named
//! substreams so adding an experiment never perturbs another's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Derive the substream seed for `label` from a master seed by hashing
/// the little-endian master bytes followed by the label.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Seeded generator for the named substream.
pub fn substream(master: u64, label: &str) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(master, label))
}
