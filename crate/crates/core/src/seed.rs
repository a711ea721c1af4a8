//! Named random substreams derived from one root seed, so that toggling one
//! stage never shifts the random numbers seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub const SPLIT: &str = "split";
pub const INIT: &str = "init";
pub const EMBEDDINGS: &str = "embeddings";
pub const SHUFFLE: &str = "shuffle";
pub const DROPOUT: &str = "dropout";

pub fn derive(root: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(name.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng(root: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(root, name))
}
