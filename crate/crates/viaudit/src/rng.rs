//! Deterministic per-sample random streams.
//!
//! Every random decision in the pipeline draws from a stream derived from
//! the global seed and the sample id, so concurrent execution and batch
//! partitioning never change outcomes.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Independent stream for one sample under one global seed.
pub fn sample_stream(seed: u64, sample_id: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update([0x1f]);
    hasher.update(sample_id.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}
