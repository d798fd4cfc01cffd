//! Named, reproducible random streams.
//!
//! Every random draw in the crate comes from a stream keyed by
//! `(master seed, label, index)`. Streams for different replicates are
//! independent of scheduling, so parallel runs reproduce serial ones bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Derive the RNG for sub-stream `label`/`index` of `master`.
pub fn stream(master: u64, label: &str, index: u64) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// Derive a child master seed, for handing a seed to a nested harness.
pub fn child_seed(master: u64, label: &str, index: u64) -> u64 {
    use rand::RngCore;
    stream(master, label, index).next_u64()
}
