//! Per-bit reference implementations and fixtures shared by the integration tests.
#![allow(dead_code)]

pub mod checks;

use hdx_core::encoder::EncoderModel;
use hdx_core::BitHypervector;

pub fn bits(hv: &BitHypervector) -> Vec<bool> {
    (0..hv.dim()).map(|j| hv.get(j)).collect()
}

pub fn naive_xor(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(x, y)| x != y).collect()
}

pub fn naive_hamming(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

pub fn naive_popcount(a: &[bool]) -> usize {
    a.iter().filter(|&&x| x).count()
}

pub fn naive_accumulate(acc: &mut [i64], hv: &[bool]) {
    for (c, &b) in acc.iter_mut().zip(hv) {
        if b {
            *c += 1;
        }
    }
}

/// Bit is set when the count reaches half of `n` (ties go to 1).
pub fn naive_binarize(acc: &[i64], n: usize) -> Vec<bool> {
    acc.iter().map(|&c| c as f64 >= n as f64 / 2.0).collect()
}

pub fn naive_cosine(hv: &[bool], s: &[f64]) -> f64 {
    let x: Vec<f64> = hv.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let dot: f64 = x.iter().zip(s).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ns = s.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nx == 0.0 || ns == 0.0 {
        0.0
    } else {
        dot / (nx * ns)
    }
}

pub fn naive_quantize(v: f64, k: usize) -> usize {
    let v = v.clamp(0.0, 1.0);
    let reached = (0..k).filter(|&j| v * k as f64 >= j as f64).count();
    reached - 1
}

pub fn naive_encode(model: &EncoderModel, features: &[f64]) -> Vec<bool> {
    let k = model.config().levels;
    let dim = model.config().dim;
    let mut acc = vec![0i64; dim];
    for (i, &v) in features.iter().enumerate() {
        let base = bits(&model.base_table()[i]);
        let level = bits(&model.level_ladder()[naive_quantize(v, k)]);
        naive_accumulate(&mut acc, &naive_xor(&base, &level));
    }
    naive_binarize(&acc, features.len())
}

pub fn padding_is_zero(hv: &BitHypervector) -> bool {
    let rem = hv.dim() % 64;
    rem == 0 || hv.words().last().is_none_or(|w| w >> rem == 0)
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &t in &idx[i..=j] {
            r[t] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx * vy).sqrt()
}

/// dim=8 hand-simulated training example.
pub mod golden {
    pub const NORMAL: [&str; 4] = ["11110000", "11100000", "00001111", "10101010"];
    pub const SHUFFLED: [&str; 4] = ["00001111", "00011110", "01010101", "00110011"];
    pub const ALPHA: f64 = 0.02;

    pub const INIT_NORM: [f64; 8] = [3.0, 2.0, 3.0, 1.0, 2.0, 1.0, 2.0, 1.0];
    pub const INIT_SHUF: [f64; 8] = [0.0, 1.0, 1.0, 3.0, 2.0, 3.0, 3.0, 3.0];

    /// (sim_norm, sim_shuf) before each visit, epochs 0 and 1.
    pub const STEP_SIMS: [[(f64, f64); 4]; 2] = [
        [
            (0.783349, 0.385758),
            (0.80403, 0.178174),
            (0.522233, 0.848668),
            (0.870688, 0.462243),
        ],
        [
            (0.780498, 0.387788),
            (0.801103, 0.179111),
            (0.527269, 0.846928),
            (0.870956, 0.461563),
        ],
    ];
    pub const UPDATED_STEP: usize = 2;
    pub const EPOCH_UPDATES: [usize; 2] = [1, 1];

    pub const FINAL_NORM: [f64; 8] = [3.0, 2.0, 3.0, 1.0, 2.04, 1.04, 2.04, 1.04];
    pub const FINAL_SHUF: [f64; 8] = [0.0, 1.0, 1.0, 3.0, 1.96, 2.96, 2.96, 2.96];
    pub const SIM_TOL: f64 = 5e-7;
}
