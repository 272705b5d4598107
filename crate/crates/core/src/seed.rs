//! Seeded, counter-based random streams.
//!
//! Every random consumer is addressed by a `(master_seed, stream_id)` pair and
//! drives a ChaCha20 generator keyed by the master seed with the stream id
//! selecting the ChaCha stream. Sequences therefore depend only on the pair,
//! never on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// Name and version of the generator, echoed into run manifests.
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.9), key = splitmix64(master_seed) x4, stream = stream_id";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    /// A sub-stream for an indexed consumer (layer, trial, chunk).
    ///
    /// Children of distinct indices, and children of distinct parents, land on
    /// distinct stream ids with overwhelming probability.
    pub fn child(self, index: u64) -> Self {
        let mixed = splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)));
        Self { master_seed: self.master_seed, stream_id: mixed }
    }

    pub fn rng(self) -> ChaCha20Rng {
        let mut key = [0u8; 32];
        let mut state = self.master_seed;
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(self.stream_id);
        rng
    }
}
