//! Seeded random source used for every stochastic step.
//!
//! The generator is ChaCha8 (`rand_chacha`), seeded through
//! `SeedableRng::seed_from_u64`. Both are specified bit-for-bit and do not
//! depend on the host platform, so a seed reproduces the same hypervectors
//! everywhere. Independent sub-streams are selected with ChaCha's stream
//! counter rather than by perturbing the seed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream ids used by the pipeline. Keeping them here avoids two stages
/// accidentally sharing a stream.
pub mod streams {
    pub const BASE_TABLE: u64 = 1;
    pub const LEVEL_LADDER: u64 = 2;
    pub const COLUMN_SHUFFLE: u64 = 3;
    pub const NORMAL_SAMPLE: u64 = 4;
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
