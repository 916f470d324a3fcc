//! One-class similarity model.
//!
//! Two real-valued class vectors are built by column-summing encoded
//! records: one from normal traffic, one from its column-shuffled copy.
//! Training then walks the normal records in order; whenever a record looks
//! more like the shuffled class than the normal one, it is added to the
//! normal vector and subtracted from the shuffled vector (step `alpha`).
//! Updates are online: later records in the same epoch see them.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{check_dim, Error, Result};
use crate::hv::{cosine_from_parts, cosine_similarity, BitHypervector, RealHypervector, Sign};

pub const DEFAULT_ALPHA: f64 = 0.02;
pub const DEFAULT_EPOCHS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionMode {
    /// Normal iff similarity to the normal vector is at least the
    /// similarity to the shuffled vector.
    #[default]
    Comparative,
    /// Normal iff similarity to the normal vector exceeds a fixed threshold.
    Absolute,
}

impl FromStr for DecisionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "comparative" => Ok(DecisionMode::Comparative),
            "absolute" | "absolute-threshold" => Ok(DecisionMode::Absolute),
            other => Err(Error::InvalidConfig(format!(
                "unknown mode {other:?} (expected comparative or absolute)"
            ))),
        }
    }
}

impl std::fmt::Display for DecisionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DecisionMode::Comparative => "comparative",
            DecisionMode::Absolute => "absolute",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub epochs: usize,
    pub mode: DecisionMode,
    pub threshold: Option<f64>,
    pub symmetric_updates: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            epochs: DEFAULT_EPOCHS,
            mode: DecisionMode::Comparative,
            threshold: None,
            symmetric_updates: false,
        }
    }
}

impl TrainConfig {
    /// `alpha == 0` is accepted; it leaves the initial vectors untouched.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be a finite non-negative number, got {}",
                self.alpha
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        match (self.mode, self.threshold) {
            (DecisionMode::Absolute, None) => Err(Error::InvalidConfig(
                "absolute mode requires a threshold".into(),
            )),
            (_, Some(t)) if !t.is_finite() => {
                Err(Error::InvalidConfig(format!("threshold {t} is not finite")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub sim_norm: f64,
    pub sim_shuf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub label: Label,
    pub scores: Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityModel {
    pub s_norm: RealHypervector,
    pub s_shuf: RealHypervector,
    pub config: TrainConfig,
    /// Updates applied in each epoch.
    pub training_stats: Vec<usize>,
}

/// Column-wise sum of the encoded records.
pub fn init_similarity(encoded: &[BitHypervector]) -> Result<RealHypervector> {
    let first = encoded.first().ok_or(Error::EmptyInput("encoded set"))?;
    let dim = first.dim();
    let mut counts = vec![0u64; dim];
    for hv in encoded {
        check_dim(dim, hv.dim())?;
        for j in hv.iter_ones() {
            counts[j] += 1;
        }
    }
    RealHypervector::from_values(counts.into_iter().map(|c| c as f64).collect())
}

/// A class vector together with its cached Euclidean norm.
struct ClassVector {
    s: RealHypervector,
    norm: f64,
}

impl ClassVector {
    fn new(s: RealHypervector) -> Self {
        let norm = s.norm();
        Self { s, norm }
    }

    fn cosine(&self, hv: &BitHypervector, ones: u32) -> f64 {
        let dot: f64 = hv.iter_ones().map(|j| self.s.values()[j]).sum();
        cosine_from_parts(dot, ones, self.norm)
    }

    fn step(&mut self, alpha: f64, hv: &BitHypervector, sign: Sign) -> Result<()> {
        self.s.axpy(alpha, hv, sign)?;
        self.norm = self.s.norm();
        if !self.norm.is_finite() {
            return Err(Error::NonFinite(
                "class vector overflowed during training".into(),
            ));
        }
        Ok(())
    }
}

pub fn train(
    normal_enc: &[BitHypervector],
    shuf_enc: &[BitHypervector],
    cfg: &TrainConfig,
) -> Result<SimilarityModel> {
    cfg.validate()?;
    let mut norm = ClassVector::new(init_similarity(normal_enc)?);
    let mut shuf = ClassVector::new(init_similarity(shuf_enc)?);
    check_dim(norm.s.dim(), shuf.s.dim())?;

    let normal_ones: Vec<u32> = normal_enc.iter().map(BitHypervector::count_ones).collect();
    let shuf_ones: Vec<u32> = shuf_enc.iter().map(BitHypervector::count_ones).collect();

    let mut training_stats = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let mut updates = 0;
        for (hv, &ones) in normal_enc.iter().zip(&normal_ones) {
            if norm.cosine(hv, ones) < shuf.cosine(hv, ones) {
                norm.step(cfg.alpha, hv, Sign::Plus)?;
                shuf.step(cfg.alpha, hv, Sign::Minus)?;
                updates += 1;
            }
        }
        if cfg.symmetric_updates {
            for (hv, &ones) in shuf_enc.iter().zip(&shuf_ones) {
                if shuf.cosine(hv, ones) < norm.cosine(hv, ones) {
                    shuf.step(cfg.alpha, hv, Sign::Plus)?;
                    norm.step(cfg.alpha, hv, Sign::Minus)?;
                    updates += 1;
                }
            }
        }
        training_stats.push(updates);
    }

    Ok(SimilarityModel {
        s_norm: norm.s,
        s_shuf: shuf.s,
        config: *cfg,
        training_stats,
    })
}

impl SimilarityModel {
    pub fn dim(&self) -> usize {
        self.s_norm.dim()
    }

    pub fn score(&self, hv: &BitHypervector) -> Result<Scores> {
        Ok(Scores {
            sim_norm: cosine_similarity(hv, &self.s_norm)?,
            sim_shuf: cosine_similarity(hv, &self.s_shuf)?,
        })
    }

    pub fn decide(&self, scores: Scores) -> Label {
        let normal = match self.config.mode {
            DecisionMode::Comparative => scores.sim_norm >= scores.sim_shuf,
            DecisionMode::Absolute => {
                scores.sim_norm > self.config.threshold.unwrap_or(f64::INFINITY)
            }
        };
        if normal {
            Label::Normal
        } else {
            Label::Anomalous
        }
    }

    pub fn classify(&self, hv: &BitHypervector) -> Result<Decision> {
        let scores = self.score(hv)?;
        Ok(Decision {
            label: self.decide(scores),
            scores,
        })
    }

    /// Scores many records at once. The class-vector norms are computed once.
    pub fn score_all(&self, encoded: &[BitHypervector]) -> Result<Vec<Scores>> {
        let norm_n = self.s_norm.norm();
        let norm_s = self.s_shuf.norm();
        if !(norm_n.is_finite() && norm_s.is_finite()) {
            return Err(Error::NonFinite("similarity vector overflowed".into()));
        }
        encoded
            .par_iter()
            .map(|hv| {
                let ones = hv.count_ones();
                Ok(Scores {
                    sim_norm: cosine_from_parts(self.s_norm.dot_bits(hv)?, ones, norm_n),
                    sim_shuf: cosine_from_parts(self.s_shuf.dot_bits(hv)?, ones, norm_s),
                })
            })
            .collect()
    }

    pub fn with_decision(mut self, mode: DecisionMode, threshold: Option<f64>) -> Result<Self> {
        self.config.mode = mode;
        if threshold.is_some() {
            self.config.threshold = threshold;
        }
        self.config.validate()?;
        Ok(self)
    }
}

pub fn score(model: &SimilarityModel, hv: &BitHypervector) -> Result<Scores> {
    model.score(hv)
}

pub fn classify(model: &SimilarityModel, hv: &BitHypervector) -> Result<Decision> {
    model.classify(hv)
}
