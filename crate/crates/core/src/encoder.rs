//! Record encoding: base table, level ladder, quantization, bind and bundle.
//!
//! A record with `n` normalized features becomes one `dim`-bit vector:
//!
//! ```text
//! h_i  = base[i] XOR level[quantize(f_i)]
//! H    = sum_i h_i                      (per position, 0..=n)
//! out  = [H_j >= n / 2] for each j
//! ```
//!
//! The hot path never materialises `H` as integers. Counts are kept
//! bit-sliced (one `u64` plane per count bit) and the majority test is a
//! word-parallel comparison against the constant `ceil(n / 2)`.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureSpec;
use crate::error::{Error, Result};
use crate::hv::BitHypervector;
use crate::rng::{streams, SeededRng};

pub const DEFAULT_DIM: usize = 10_000;
pub const DEFAULT_LEVELS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub dim: usize,
    pub levels: usize,
    pub n_features: usize,
    pub seed: u64,
}

impl EncoderConfig {
    pub fn new(dim: usize, levels: usize, n_features: usize, seed: u64) -> Self {
        Self {
            dim,
            levels,
            n_features,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if self.levels < 2 {
            return Err(Error::InvalidConfig(format!(
                "levels must be at least 2, got {}",
                self.levels
            )));
        }
        if self.dim < self.levels {
            return Err(Error::InvalidConfig(format!(
                "dim ({}) must be at least levels ({})",
                self.dim, self.levels
            )));
        }
        if self.n_features == 0 {
            return Err(Error::InvalidConfig("n_features must be at least 1".into()));
        }
        if self.n_features > u32::MAX as usize {
            return Err(Error::InvalidConfig("too many features".into()));
        }
        Ok(())
    }

    /// Bits flipped between consecutive levels.
    pub fn flips_per_level(&self) -> usize {
        self.dim / self.levels
    }
}

/// One independent random hypervector per feature.
pub fn build_base_table(
    config: &EncoderConfig,
    rng: &mut SeededRng,
) -> Result<Vec<BitHypervector>> {
    config.validate()?;
    (0..config.n_features)
        .map(|_| BitHypervector::random(config.dim, rng))
        .collect()
}

/// Level ladder: a random first level, then each next level flips exactly
/// `floor(dim / levels)` distinct positions of its predecessor. Positions are
/// drawn afresh at every step, so a position may flip more than once along
/// the ladder.
pub fn build_level_ladder(
    config: &EncoderConfig,
    rng: &mut SeededRng,
) -> Result<Vec<BitHypervector>> {
    config.validate()?;
    let flips = config.flips_per_level();
    let mut ladder = Vec::with_capacity(config.levels);
    ladder.push(BitHypervector::random(config.dim, rng)?);
    for _ in 1..config.levels {
        let mut next = ladder.last().expect("non-empty").clone();
        for j in index::sample(rng, config.dim, flips) {
            next.flip(j);
        }
        ladder.push(next);
    }
    Ok(ladder)
}

/// Maps a normalized value to its interval index, clamping into `[0, 1]`.
pub fn quantize(value: f64, levels: usize) -> usize {
    let v = value.clamp(0.0, 1.0);
    ((v * levels as f64).floor() as usize).min(levels.saturating_sub(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderModel {
    config: EncoderConfig,
    base_table: Vec<BitHypervector>,
    level_ladder: Vec<BitHypervector>,
    #[serde(default)]
    feature_specs: Vec<FeatureSpec>,
}

impl EncoderModel {
    /// Builds both tables from the config seed. Base table and ladder draw
    /// from separate RNG streams.
    pub fn build(config: EncoderConfig) -> Result<Self> {
        config.validate()?;
        let mut base_rng = SeededRng::with_stream(config.seed, streams::BASE_TABLE);
        let mut level_rng = SeededRng::with_stream(config.seed, streams::LEVEL_LADDER);
        Ok(Self {
            base_table: build_base_table(&config, &mut base_rng)?,
            level_ladder: build_level_ladder(&config, &mut level_rng)?,
            config,
            feature_specs: Vec::new(),
        })
    }

    pub fn from_parts(
        config: EncoderConfig,
        base_table: Vec<BitHypervector>,
        level_ladder: Vec<BitHypervector>,
    ) -> Result<Self> {
        config.validate()?;
        if base_table.len() != config.n_features {
            return Err(Error::Schema {
                expected: config.n_features,
                actual: base_table.len(),
            });
        }
        if level_ladder.len() != config.levels {
            return Err(Error::InvalidConfig(format!(
                "expected {} levels, got {}",
                config.levels,
                level_ladder.len()
            )));
        }
        if let Some(bad) = base_table
            .iter()
            .chain(&level_ladder)
            .find(|hv| hv.dim() != config.dim)
        {
            return Err(Error::DimensionMismatch {
                expected: config.dim,
                actual: bad.dim(),
            });
        }
        Ok(Self {
            config,
            base_table,
            level_ladder,
            feature_specs: Vec::new(),
        })
    }

    pub fn with_feature_specs(mut self, specs: Vec<FeatureSpec>) -> Result<Self> {
        if specs.len() != self.config.n_features {
            return Err(Error::Schema {
                expected: self.config.n_features,
                actual: specs.len(),
            });
        }
        self.feature_specs = specs;
        Ok(self)
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn base_table(&self) -> &[BitHypervector] {
        &self.base_table
    }

    pub fn level_ladder(&self) -> &[BitHypervector] {
        &self.level_ladder
    }

    pub fn feature_specs(&self) -> &[FeatureSpec] {
        &self.feature_specs
    }

    pub fn encode_record(&self, features: &[f64]) -> Result<BitHypervector> {
        let n = self.config.n_features;
        if features.len() != n {
            return Err(Error::Schema {
                expected: n,
                actual: features.len(),
            });
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature {i} is {}", features[i])));
        }

        let levels: Vec<&[u64]> = features
            .iter()
            .map(|&f| self.level_ladder[quantize(f, self.config.levels)].words())
            .collect();

        // Count bits needed for values 0..=n, and the majority cut ceil(n/2).
        let planes = (usize::BITS - n.leading_zeros()) as usize;
        let cut = n.div_ceil(2) as u64;

        let n_words = self.base_table[0].words().len();
        let mut out = vec![0u64; n_words];
        let mut counter = [0u64; 33];
        for (w, slot) in out.iter_mut().enumerate() {
            counter[..planes].fill(0);
            for (base, level) in self.base_table.iter().zip(&levels) {
                let mut carry = base.words()[w] ^ level[w];
                for plane in counter[..planes].iter_mut() {
                    if carry == 0 {
                        break;
                    }
                    let sum = *plane ^ carry;
                    carry &= *plane;
                    *plane = sum;
                }
            }
            *slot = ge_const(&counter[..planes], cut);
        }
        // Padding bits count 0, and 0 >= cut only when cut == 0, which n >= 1 rules out.
        BitHypervector::from_words(self.config.dim, out)
    }

    /// Encodes every row in parallel. Output order matches input order.
    pub fn encode_dataset(&self, rows: &[Vec<f64>]) -> Result<Vec<BitHypervector>> {
        rows.par_iter()
            .enumerate()
            .map(|(row, r)| {
                self.encode_record(r).map_err(|e| Error::Row {
                    row,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    pub fn encode_dataset_serial(&self, rows: &[Vec<f64>]) -> Result<Vec<BitHypervector>> {
        rows.iter()
            .enumerate()
            .map(|(row, r)| {
                self.encode_record(r).map_err(|e| Error::Row {
                    row,
                    source: Box::new(e),
                })
            })
            .collect()
    }
}

/// Bit-sliced `count >= cut`, with `planes[b]` holding bit `b` of each
/// position's count. Walks from the most significant plane down, tracking
/// positions already known greater and those still equal to the prefix of `cut`.
#[inline]
fn ge_const(planes: &[u64], cut: u64) -> u64 {
    if planes.len() < 64 && cut >> planes.len() != 0 {
        return 0;
    }
    let mut greater = 0u64;
    let mut equal = u64::MAX;
    for (b, &plane) in planes.iter().enumerate().rev() {
        if (cut >> b) & 1 == 1 {
            equal &= plane;
        } else {
            greater |= equal & plane;
            equal &= !plane;
        }
    }
    greater | equal
}

pub fn encode_record(model: &EncoderModel, features: &[f64]) -> Result<BitHypervector> {
    model.encode_record(features)
}

pub fn encode_dataset(model: &EncoderModel, rows: &[Vec<f64>]) -> Result<Vec<BitHypervector>> {
    model.encode_dataset(rows)
}
