//! Fixtures for the criterion benchmarks.

use hdx_core::encoder::{EncoderConfig, EncoderModel, DEFAULT_DIM, DEFAULT_LEVELS};
use hdx_core::synth::prototype_task;
use hdx_core::{BitHypervector, SeededRng};
use rand::Rng;

pub const N_FEATURES: usize = 41;

pub fn encoder(dim: usize) -> EncoderModel {
    EncoderModel::build(EncoderConfig::new(dim, DEFAULT_LEVELS, N_FEATURES, 7))
        .expect("valid config")
}

pub fn default_encoder() -> EncoderModel {
    encoder(DEFAULT_DIM)
}

/// `n` rows of uniform features in `[0, 1]`.
pub fn rows(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SeededRng::new(seed);
    (0..n)
        .map(|_| (0..N_FEATURES).map(|_| rng.gen()).collect())
        .collect()
}

pub fn random_pair(dim: usize) -> (BitHypervector, BitHypervector) {
    let mut rng = SeededRng::new(3);
    (
        BitHypervector::random(dim, &mut rng).expect("dim > 0"),
        BitHypervector::random(dim, &mut rng).expect("dim > 0"),
    )
}

/// Normal and negative training sets of `n` vectors each.
pub fn training_sets(dim: usize, n: usize) -> (Vec<BitHypervector>, Vec<BitHypervector>) {
    let t = prototype_task(dim, n, 0, 0.1, 5).expect("dim > 0");
    (t.normal_train, t.negative_train)
}
