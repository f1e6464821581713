//! Reproducible random streams keyed by `(seed, stream)`.
//!
//! Every unit of parallel work (a replicate, a resample, a chunk of Monte
//! Carlo draws) derives its own stream from its index, never from the
//! executing thread, so results do not depend on the schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Identifies one independent random sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn make_rng(seed: u64, stream: u64) -> RngStream {
    RngStream::new(seed, stream)
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Stream `index` of a new family keyed by this stream; used for nesting
    /// (replicate → test → resample).
    pub fn child(&self, index: u64) -> RngStream {
        RngStream::new(mix(self.seed ^ mix(self.stream.wrapping_add(0x5851_F42D_4C95_7F2D))), index)
    }
}
