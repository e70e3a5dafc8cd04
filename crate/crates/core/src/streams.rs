//! Deterministic random substreams.
//!
//! Every draw in a simulation is keyed by `(master seed, trial, node, purpose)`.
//! The master seed and trial index form the ChaCha key; node and purpose
//! select the stream. Results therefore do not depend on worker count or on
//! the order in which trials are executed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is used for. Attack coins never share a stream with
/// sensing noise, so clean and attacked runs stay paired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Noise = 0,
    Attack = 1,
    Hypothesis = 2,
}

/// Node slot used for draws that belong to the whole network.
pub const NETWORK: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    master: u64,
}

impl SeedTree {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn rng(&self, trial: u64, node: u32, purpose: Purpose) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master.to_le_bytes());
        key[8..16].copy_from_slice(&trial.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(((node as u64) << 2) | purpose as u64);
        rng
    }
}
