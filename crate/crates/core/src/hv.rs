//! Packed binary hypervectors and the real-valued class vectors they are
//! compared against.
//!
//! Bits live in little-endian `u64` words: bit `j` is bit `j % 64` of word
//! `j / 64`. Bits past `dim` in the last word are always zero, so word-level
//! popcounts never need masking.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng::SeededRng;
use rand::RngCore;

pub const WORD_BITS: usize = u64::BITS as usize;

#[inline]
pub(crate) fn words_for(dim: usize) -> usize {
    dim.div_ceil(WORD_BITS)
}

/// Mask of the valid bits in the last word of a `dim`-bit vector.
#[inline]
fn tail_mask(dim: usize) -> u64 {
    match dim % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawBits", into = "RawBits")]
pub struct BitHypervector {
    dim: usize,
    words: Vec<u64>,
}

/// Wire form of a [`BitHypervector`]: the dimension plus the packed words.
#[derive(Serialize, Deserialize)]
struct RawBits {
    dim: usize,
    words: Vec<u64>,
}

impl TryFrom<RawBits> for BitHypervector {
    type Error = Error;

    fn try_from(raw: RawBits) -> Result<Self> {
        BitHypervector::from_words(raw.dim, raw.words)
    }
}

impl From<BitHypervector> for RawBits {
    fn from(hv: BitHypervector) -> Self {
        RawBits {
            dim: hv.dim,
            words: hv.words,
        }
    }
}

impl BitHypervector {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self {
            dim,
            words: vec![0; words_for(dim)],
        })
    }

    /// Uniform random vector: every bit is an independent fair coin.
    pub fn random(dim: usize, rng: &mut SeededRng) -> Result<Self> {
        let mut hv = Self::zeros(dim)?;
        for w in hv.words.iter_mut() {
            *w = rng.next_u64();
        }
        hv.clear_padding();
        Ok(hv)
    }

    pub fn from_words(dim: usize, words: Vec<u64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        check_dim(words_for(dim), words.len())?;
        let last = *words.last().expect("dim >= 1");
        if last & !tail_mask(dim) != 0 {
            return Err(Error::Model(format!(
                "padding bits beyond dimension {dim} are set"
            )));
        }
        Ok(Self { dim, words })
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let mut hv = Self::zeros(bits.len())?;
        for (j, &b) in bits.iter().enumerate() {
            if b {
                hv.set(j, true);
            }
        }
        Ok(hv)
    }

    /// Parses a string of `0`/`1` characters; index 0 is the first character.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidConfig(format!("not a bit: {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(&bits)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, j: usize) -> bool {
        assert!(j < self.dim, "bit {j} out of range for dim {}", self.dim);
        (self.words[j / WORD_BITS] >> (j % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, j: usize, value: bool) {
        assert!(j < self.dim, "bit {j} out of range for dim {}", self.dim);
        let mask = 1u64 << (j % WORD_BITS);
        if value {
            self.words[j / WORD_BITS] |= mask;
        } else {
            self.words[j / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, j: usize) {
        assert!(j < self.dim, "bit {j} out of range for dim {}", self.dim);
        self.words[j / WORD_BITS] ^= 1u64 << (j % WORD_BITS);
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn to_bits(&self) -> Vec<bool> {
        (0..self.dim).map(|j| self.get(j)).collect()
    }

    /// Indices of set bits, ascending.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * WORD_BITS + tz)
            })
        })
    }

    /// Element-wise XOR binding.
    pub fn xor(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(Self {
            dim: self.dim,
            words,
        })
    }

    pub fn hamming(&self, other: &Self) -> Result<u32> {
        check_dim(self.dim, other.dim)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum())
    }

    pub(crate) fn clear_padding(&mut self) {
        let mask = tail_mask(self.dim);
        if let Some(last) = self.words.last_mut() {
            *last &= mask;
        }
    }
}

impl std::fmt::Debug for BitHypervector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.dim <= 64 {
            let s: String = self
                .to_bits()
                .iter()
                .map(|&b| if b { '1' } else { '0' })
                .collect();
            write!(f, "BitHypervector({s})")
        } else {
            write!(
                f,
                "BitHypervector {{ dim: {}, ones: {} }}",
                self.dim,
                self.count_ones()
            )
        }
    }
}

/// `random_hv`: free-function form of [`BitHypervector::random`].
pub fn random_hv(dim: usize, rng: &mut SeededRng) -> Result<BitHypervector> {
    BitHypervector::random(dim, rng)
}

pub fn xor_bind(a: &BitHypervector, b: &BitHypervector) -> Result<BitHypervector> {
    a.xor(b)
}

pub fn hamming(a: &BitHypervector, b: &BitHypervector) -> Result<u32> {
    a.hamming(b)
}

/// Per-position integer sums of bundled hypervectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntAccumulator {
    values: Vec<i32>,
}

impl IntAccumulator {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self {
            values: vec![0; dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub fn accumulate(&mut self, hv: &BitHypervector) -> Result<()> {
        check_dim(self.dim(), hv.dim())?;
        for j in hv.iter_ones() {
            self.values[j] += 1;
        }
        Ok(())
    }

    /// Majority threshold: bit `j` is set iff `values[j] >= n / 2`.
    ///
    /// Compared as `2 * v >= n` so that an even `n` sends an exact tie to 1.
    pub fn binarize_majority(&self, n: usize) -> Result<BitHypervector> {
        if n == 0 {
            return Err(Error::InvalidConfig(
                "majority threshold needs n >= 1".into(),
            ));
        }
        let mut out = BitHypervector::zeros(self.dim())?;
        for (j, &v) in self.values.iter().enumerate() {
            if 2 * i64::from(v) >= n as i64 {
                out.set(j, true);
            }
        }
        Ok(out)
    }
}

pub fn accumulate(acc: &mut IntAccumulator, hv: &BitHypervector) -> Result<()> {
    acc.accumulate(hv)
}

pub fn binarize_majority(acc: &IntAccumulator, n: usize) -> Result<BitHypervector> {
    acc.binarize_majority(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn apply(self, x: f64) -> f64 {
        match self {
            Sign::Plus => x,
            Sign::Minus => -x,
        }
    }
}

/// Dense `f64` vector; all entries finite at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RealHypervector {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for RealHypervector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        RealHypervector::from_values(values)
    }
}

impl From<RealHypervector> for Vec<f64> {
    fn from(s: RealHypervector) -> Self {
        s.values
    }
}

impl RealHypervector {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self {
            values: vec![0.0; dim],
        })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "real hypervector entry {j} is {}",
                values[j]
            )));
        }
        Ok(Self { values })
    }

    /// Lifts a bit vector to reals (0.0 / 1.0).
    pub fn lift(hv: &BitHypervector) -> Self {
        let mut values = vec![0.0; hv.dim()];
        for j in hv.iter_ones() {
            values[j] = 1.0;
        }
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Dot product with a 0/1 vector: the sum of entries at set bits.
    pub fn dot_bits(&self, hv: &BitHypervector) -> Result<f64> {
        check_dim(self.dim(), hv.dim())?;
        Ok(hv.iter_ones().map(|j| self.values[j]).sum())
    }

    /// `self += sign * alpha * hv`, touching only positions where `hv` is set.
    pub fn axpy(&mut self, alpha: f64, hv: &BitHypervector, sign: Sign) -> Result<()> {
        check_dim(self.dim(), hv.dim())?;
        if !alpha.is_finite() {
            return Err(Error::NonFinite(format!("step size {alpha}")));
        }
        let step = sign.apply(alpha);
        for j in hv.iter_ones() {
            self.values[j] += step;
        }
        Ok(())
    }
}

pub fn axpy(s: &mut RealHypervector, alpha: f64, hv: &BitHypervector, sign: Sign) -> Result<()> {
    s.axpy(alpha, hv, sign)
}

/// Combines a precomputed dot product and norms into a cosine score.
/// Zero when either side has zero norm.
#[inline]
pub(crate) fn cosine_from_parts(dot: f64, hv_ones: u32, s_norm: f64) -> f64 {
    if hv_ones == 0 || s_norm == 0.0 {
        return 0.0;
    }
    dot / ((hv_ones as f64).sqrt() * s_norm)
}

/// Cosine similarity between a 0/1 hypervector and a real vector.
///
/// The bit vector's Euclidean norm is `sqrt(popcount)`. Returns 0 when
/// either operand has zero norm.
pub fn cosine_similarity(hv: &BitHypervector, s: &RealHypervector) -> Result<f64> {
    let dot = s.dot_bits(hv)?;
    let norm = s.norm();
    if !norm.is_finite() || !dot.is_finite() {
        return Err(Error::NonFinite("similarity vector overflowed".into()));
    }
    Ok(cosine_from_parts(dot, hv.count_ones(), norm))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hv(s: &str) -> BitHypervector {
        BitHypervector::from_bit_str(s).unwrap()
    }

    #[test]
    fn zero_dim_rejected() {
        assert!(matches!(
            BitHypervector::zeros(0),
            Err(Error::InvalidDimension(0))
        ));
        let mut rng = SeededRng::new(1);
        assert!(random_hv(0, &mut rng).is_err());
        assert!(IntAccumulator::zeros(0).is_err());
        assert!(RealHypervector::zeros(0).is_err());
    }

    #[test]
    fn random_pad_bits_are_zero() {
        let mut rng = SeededRng::new(3);
        for dim in [1, 63, 64, 65, 100, 10_000] {
            let v = random_hv(dim, &mut rng).unwrap();
            assert_eq!(v.words().len(), words_for(dim));
            assert_eq!(v.words().last().unwrap() & !tail_mask(dim), 0);
            assert!(v.count_ones() as usize <= dim);
        }
    }

    #[test]
    fn random_pair_is_near_orthogonal() {
        let mut rng = SeededRng::new(11);
        let a = random_hv(10_000, &mut rng).unwrap();
        let b = random_hv(10_000, &mut rng).unwrap();
        let d = hamming(&a, &b).unwrap();
        assert!((4700..=5300).contains(&d), "{d}");
    }

    #[test]
    fn repeated_draws_differ() {
        let mut rng = SeededRng::new(42);
        let a = random_hv(64, &mut rng).unwrap();
        let b = random_hv(64, &mut rng).unwrap();
        assert_ne!(a, b);
    }

    // Frozen from one run of ChaCha8 seeded with 42 on stream 0.
    #[test]
    fn random_dim8_golden() {
        let mut rng = SeededRng::new(42);
        let v = random_hv(8, &mut rng).unwrap();
        assert_eq!(format!("{v:?}"), "BitHypervector(10000101)");
    }

    #[test]
    fn xor_cases() {
        let a = hv("1010");
        assert_eq!(xor_bind(&a, &a).unwrap(), BitHypervector::zeros(4).unwrap());
        assert_eq!(xor_bind(&a, &hv("0000")).unwrap(), a);
        assert_eq!(xor_bind(&a, &hv("0110")).unwrap(), hv("1100"));
        assert!(matches!(
            xor_bind(&a, &hv("101")),
            Err(Error::DimensionMismatch {
                expected: 4,
                actual: 3
            })
        ));
    }

    #[test]
    fn hamming_cases() {
        let a = hv("1010");
        assert_eq!(hamming(&a, &a).unwrap(), 0);
        assert_eq!(hamming(&a, &hv("0101")).unwrap(), 4);
        assert!(hamming(&a, &hv("10100")).is_err());
    }

    #[test]
    fn accumulate_cases() {
        let mut acc = IntAccumulator::zeros(4).unwrap();
        for s in ["1010", "0110", "1110"] {
            accumulate(&mut acc, &hv(s)).unwrap();
        }
        assert_eq!(acc.values(), &[2, 2, 3, 0]);

        let mut acc = IntAccumulator::zeros(4).unwrap();
        accumulate(&mut acc, &hv("1010")).unwrap();
        assert_eq!(acc.values(), &[1, 0, 1, 0]);
        accumulate(&mut acc, &hv("1010")).unwrap();
        accumulate(&mut acc, &hv("1010")).unwrap();
        assert_eq!(acc.values(), &[3, 0, 3, 0]);

        assert!(accumulate(&mut acc, &hv("10")).is_err());
    }

    #[test]
    fn binarize_cases() {
        let acc = IntAccumulator {
            values: vec![2, 2, 3, 0],
        };
        assert_eq!(binarize_majority(&acc, 3).unwrap(), hv("1110"));

        // Exact tie at n/2 maps to 1.
        let acc = IntAccumulator {
            values: vec![1, 0, 2, 1],
        };
        assert_eq!(binarize_majority(&acc, 2).unwrap(), hv("1011"));

        let one = hv("0110100");
        let mut acc = IntAccumulator::zeros(7).unwrap();
        acc.accumulate(&one).unwrap();
        assert_eq!(binarize_majority(&acc, 1).unwrap(), one);

        assert!(binarize_majority(&acc, 0).is_err());
    }

    #[test]
    fn cosine_cases() {
        let s = RealHypervector::from_values(vec![1.0; 4]).unwrap();
        assert!((cosine_similarity(&hv("1111"), &s).unwrap() - 1.0).abs() < 1e-15);

        let s = RealHypervector::from_values(vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(cosine_similarity(&hv("1100"), &s).unwrap(), 0.0);

        let s = RealHypervector::from_values(vec![2.0, 0.0, 1.0, 0.0]).unwrap();
        let expected = 3.0 / 10f64.sqrt();
        assert!((cosine_similarity(&hv("1010"), &s).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.9487).abs() < 1e-4);
    }

    #[test]
    fn cosine_zero_norm_rule() {
        let s = RealHypervector::zeros(4).unwrap();
        assert_eq!(cosine_similarity(&hv("1111"), &s).unwrap(), 0.0);
        let s = RealHypervector::from_values(vec![1.0; 4]).unwrap();
        assert_eq!(cosine_similarity(&hv("0000"), &s).unwrap(), 0.0);
    }

    #[test]
    fn cosine_errors() {
        let s = RealHypervector::from_values(vec![1.0; 3]).unwrap();
        assert!(cosine_similarity(&hv("1111"), &s).is_err());
        assert!(RealHypervector::from_values(vec![1.0, f64::NAN]).is_err());
        let s = RealHypervector::from_values(vec![f64::MAX; 4]).unwrap();
        assert!(matches!(
            cosine_similarity(&hv("1111"), &s),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn cosine_with_own_lift_is_one() {
        let mut rng = SeededRng::new(5);
        for dim in [1, 7, 64, 300] {
            let v = random_hv(dim, &mut rng).unwrap();
            if v.count_ones() == 0 {
                continue;
            }
            let s = RealHypervector::lift(&v);
            assert!((cosine_similarity(&v, &s).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn axpy_cases() {
        let mut s = RealHypervector::zeros(4).unwrap();
        axpy(&mut s, 0.0, &hv("1111"), Sign::Plus).unwrap();
        assert_eq!(s.values(), &[0.0; 4]);

        axpy(&mut s, 0.02, &hv("1010"), Sign::Plus).unwrap();
        assert_eq!(s.values(), &[0.02, 0.0, 0.02, 0.0]);

        let mut t = RealHypervector::from_values(vec![3.5, -1.25, 7.0, 0.1]).unwrap();
        let before = t.clone();
        axpy(&mut t, 0.02, &hv("1101"), Sign::Plus).unwrap();
        axpy(&mut t, 0.02, &hv("1101"), Sign::Minus).unwrap();
        for (a, b) in t.values().iter().zip(before.values()) {
            assert!((a - b).abs() <= 1e-12);
        }

        assert!(axpy(&mut t, 0.02, &hv("11"), Sign::Plus).is_err());
    }

    #[test]
    fn serde_rejects_dirty_padding() {
        let json = r#"{"dim":4,"words":[255]}"#;
        assert!(serde_json::from_str::<BitHypervector>(json).is_err());
        let json = r#"{"dim":4,"words":[5]}"#;
        let v: BitHypervector = serde_json::from_str(json).unwrap();
        assert_eq!(v, hv("1010"));
    }

    #[test]
    fn iter_ones_matches_get() {
        let mut rng = SeededRng::new(9);
        let v = random_hv(200, &mut rng).unwrap();
        let ones: Vec<usize> = v.iter_ones().collect();
        let expected: Vec<usize> = (0..200).filter(|&j| v.get(j)).collect();
        assert_eq!(ones, expected);
    }
}
