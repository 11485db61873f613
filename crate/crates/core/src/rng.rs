//! Seeded random streams.
//!
//! Every random decision in the crate draws from a ChaCha8 generator keyed by
//! a user seed plus a fixed stream id, so independent concerns (shuffling,
//! augmentation, initialization) never perturb one another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream ids. Values are part of the reproducibility contract.
pub mod stream {
    pub const PROTOTYPES: u64 = 1;
    /// Instance sampling uses `INSTANCES + split index`.
    pub const INSTANCES: u64 = 2;
    pub const NOISE: u64 = 10;
    pub const INIT: u64 = 20;
    pub const SHUFFLE: u64 = 21;
    pub const AUGMENT: u64 = 22;
}

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
