//! Measurements behind the acceptance criteria, shared by the integration
//! tests and the acceptance harness.

use std::fs;
use std::path::Path;

use hdx_core::dataset::{column_shuffle, load_nslkdd};
use hdx_core::encoder::{build_base_table, build_level_ladder, EncoderConfig};
use hdx_core::eval::compute_metrics;
use hdx_core::hv::{cosine_similarity, hamming};
use hdx_core::oneclass::{init_similarity, train};
use hdx_core::pipeline::train_from_table;
use hdx_core::rng::streams;
use hdx_core::synth::{noisy_copy, prototype_task};
use hdx_core::{
    BitHypervector, GridSpec, Label, LabeledDataset, RealHypervector, RecordSchema, RunConfig,
    SeededRng, Sign, Split, TrainConfig,
};
use rand::Rng;

use super::{bits, golden, naive_hamming};

#[derive(Debug)]
pub struct Check {
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

pub fn ladder(dim: usize, levels: usize, seed: u64) -> Vec<BitHypervector> {
    let cfg = EncoderConfig::new(dim, levels, 1, seed);
    build_level_ladder(
        &cfg,
        &mut SeededRng::with_stream(seed, streams::LEVEL_LADDER),
    )
    .unwrap()
}

/// Consecutive levels exactly floor(D/k) apart and the L1..Lk distance
/// near its closed-form expectation, cross-checked per bit.
pub fn ladder_geometry(seeds: u64) -> Check {
    const DIM: usize = 10_000;
    const K: usize = 10;
    let expected = DIM as f64 * (1.0 - (1.0 - 2.0 / K as f64).powi(K as i32 - 1)) / 2.0;
    let mut worst = 0.0f64;
    let mut ends = Vec::new();
    for seed in 0..seeds {
        let l = ladder(DIM, K, seed);
        for w in l.windows(2) {
            let d = hamming(&w[0], &w[1]).unwrap() as usize;
            if d != DIM / K {
                return Check::new(
                    false,
                    format!("seed {seed}: consecutive distance {d} != {}", DIM / K),
                );
            }
        }
        let end = hamming(&l[0], &l[K - 1]).unwrap() as usize;
        if end != naive_hamming(&bits(&l[0]), &bits(&l[K - 1])) {
            return Check::new(
                false,
                format!("seed {seed}: packed and per-bit endpoint distances disagree"),
            );
        }
        worst = worst.max((end as f64 - expected).abs());
        ends.push(end);
    }
    let mean = ends.iter().sum::<usize>() as f64 / ends.len() as f64;
    Check::new(
        worst <= 300.0,
        format!(
            "steps all {}; endpoint mean {mean:.1}, max |d - {expected:.1}| = {worst:.1} over {seeds} seeds (tol 300)",
            DIM / K
        ),
    )
}

/// Spearman correlation between level gap m and mean distance over seeds.
pub fn ladder_locality(seeds: u64) -> f64 {
    const K: usize = 10;
    let mut sums = vec![0.0f64; K - 1];
    for seed in 0..seeds {
        let l = ladder(10_000, K, seed);
        for m in 1..K {
            let total: u32 = (0..K - m).map(|j| hamming(&l[j], &l[j + m]).unwrap()).sum();
            sums[m - 1] += total as f64 / (K - m) as f64;
        }
    }
    let gaps: Vec<f64> = (1..K).map(|m| m as f64).collect();
    super::spearman(&gaps, &sums)
}

pub fn base_table_orthogonality(seeds: u64) -> Check {
    let (mut lo, mut hi) = (u32::MAX, 0);
    for seed in 0..seeds {
        let cfg = EncoderConfig::new(10_000, 10, 41, seed);
        let table =
            build_base_table(&cfg, &mut SeededRng::with_stream(seed, streams::BASE_TABLE)).unwrap();
        for i in 0..table.len() {
            for j in i + 1..table.len() {
                let d = hamming(&table[i], &table[j]).unwrap();
                lo = lo.min(d);
                hi = hi.max(d);
            }
        }
    }
    Check::new(
        lo >= 4700 && hi <= 5300,
        format!("pairwise distances in [{lo}, {hi}] over {seeds} tables (band 5000 +/- 300)"),
    )
}

pub fn random_dataset(n_rows: usize, n_cols: usize, seed: u64) -> LabeledDataset {
    let mut rng = SeededRng::new(seed);
    let rows: Vec<Vec<f64>> = (0..n_rows)
        .map(|_| (0..n_cols).map(|_| rng.gen()).collect())
        .collect();
    LabeledDataset {
        rows,
        labels: vec![Label::Normal; n_rows],
        source_labels: vec!["normal".into(); n_rows],
        difficulty: vec![None; n_rows],
    }
}

pub fn sorted_column(ds: &LabeledDataset, col: usize) -> Vec<f64> {
    let mut v: Vec<f64> = ds.rows.iter().map(|r| r[col]).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Marginals on random tables of several shapes and on a quantized table
/// with many ties.
pub fn shuffle_marginals() -> Check {
    let mut tested = 0;
    for (i, &(rows, cols)) in [(1, 1), (2, 41), (100, 41), (1000, 5), (37, 3)]
        .iter()
        .enumerate()
    {
        for seed in 0..10u64 {
            let mut ds = random_dataset(rows, cols, seed * 31 + i as u64);
            if seed % 2 == 1 {
                for r in &mut ds.rows {
                    for v in r.iter_mut() {
                        *v = (*v * 4.0).floor() / 4.0;
                    }
                }
            }
            let sh = column_shuffle(&ds, &mut SeededRng::new(seed));
            for c in 0..cols {
                if sorted_column(&ds, c) != sorted_column(&sh, c) {
                    return Check::new(
                        false,
                        format!("{rows}x{cols} seed {seed}: column {c} changed"),
                    );
                }
            }
            tested += 1;
        }
    }
    Check::new(
        true,
        format!("per-column sorted values identical on {tested} datasets"),
    )
}

pub fn separability(seed: u64) -> f64 {
    let task = prototype_task(10_000, 200, 500, 0.10, seed).unwrap();
    let model = train(
        &task.normal_train,
        &task.negative_train,
        &TrainConfig::default(),
    )
    .unwrap();
    let preds: Vec<Label> = task
        .test
        .iter()
        .map(|hv| model.classify(hv).unwrap().label)
        .collect();
    compute_metrics(&preds, &task.test_labels).unwrap().accuracy
}

pub fn parse_golden(s: &[&str]) -> Vec<BitHypervector> {
    s.iter()
        .map(|b| BitHypervector::from_bit_str(b).unwrap())
        .collect()
}

/// Replays the dim=8 example step by step and through `train`.
pub fn golden_trace() -> Check {
    let normal = parse_golden(&golden::NORMAL);
    let shuf = parse_golden(&golden::SHUFFLED);
    let mut s_norm = init_similarity(&normal).unwrap();
    let mut s_shuf = init_similarity(&shuf).unwrap();
    if s_norm.values() != golden::INIT_NORM || s_shuf.values() != golden::INIT_SHUF {
        return Check::new(false, "initial class vectors differ");
    }
    for (epoch, sims) in golden::STEP_SIMS.iter().enumerate() {
        for (i, (hv, &(want_n, want_s))) in normal.iter().zip(sims).enumerate() {
            let n = cosine_similarity(hv, &s_norm).unwrap();
            let s = cosine_similarity(hv, &s_shuf).unwrap();
            if (n - want_n).abs() > golden::SIM_TOL || (s - want_s).abs() > golden::SIM_TOL {
                return Check::new(
                    false,
                    format!("epoch {epoch} step {i}: ({n:.6}, {s:.6}) != ({want_n}, {want_s})"),
                );
            }
            if (n < s) != (i == golden::UPDATED_STEP) {
                return Check::new(
                    false,
                    format!("epoch {epoch} step {i}: update decision differs"),
                );
            }
            if n < s {
                s_norm.axpy(golden::ALPHA, hv, Sign::Plus).unwrap();
                s_shuf.axpy(golden::ALPHA, hv, Sign::Minus).unwrap();
            }
        }
    }
    let cfg = TrainConfig {
        alpha: golden::ALPHA,
        epochs: 2,
        ..TrainConfig::default()
    };
    let model = train(&normal, &shuf, &cfg).unwrap();
    let want_n = RealHypervector::from_values(golden::FINAL_NORM.to_vec()).unwrap();
    let want_s = RealHypervector::from_values(golden::FINAL_SHUF.to_vec()).unwrap();
    if model.s_norm != want_n || model.s_shuf != want_s {
        return Check::new(
            false,
            format!(
                "final vectors {:?} / {:?}",
                model.s_norm.values(),
                model.s_shuf.values()
            ),
        );
    }
    if model.training_stats != golden::EPOCH_UPDATES {
        return Check::new(false, format!("epoch updates {:?}", model.training_stats));
    }
    Check::new(
        true,
        "8 step similarities, 2 updates and final class vectors match exactly",
    )
}

/// Trains on a synthetic NSL-KDD file, evaluates two splits and writes the
/// model and report files into `out`.
pub fn full_run(data_dir: &Path, out: &Path, seed: u64) {
    let schema = RecordSchema::nsl_kdd();
    let mut cfg = RunConfig::new(seed);
    cfg.dim = 4096;
    cfg.epochs = 3;
    let train_table = load_nslkdd(data_dir.join("KDDTrain+.txt"), &schema).unwrap();
    let test_table = load_nslkdd(data_dir.join("KDDTest+.txt"), &schema).unwrap();
    let trained = train_from_table(&cfg, &train_table, &schema).unwrap();
    fs::create_dir_all(out).unwrap();
    trained.model_file.save(out.join("model.json")).unwrap();
    let detector = trained.model_file.detector().unwrap();
    for (table, split) in [
        (&train_table, Split::TrainPlus),
        (&test_table, Split::TestPlus),
    ] {
        detector
            .evaluate(table, split, &GridSpec::Default)
            .unwrap()
            .write(out)
            .unwrap();
    }
}

pub fn write_synthetic_data(dir: &Path) {
    use hdx_core::synth::nslkdd_like_text;
    fs::write(dir.join("KDDTrain+.txt"), nslkdd_like_text(1500, 0.45, 1)).unwrap();
    fs::write(dir.join("KDDTest+.txt"), nslkdd_like_text(600, 0.55, 2)).unwrap();
}

pub fn determinism() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    write_synthetic_data(tmp.path());
    let (a, b) = (tmp.path().join("run_a"), tmp.path().join("run_b"));
    full_run(tmp.path(), &a, 7);
    full_run(tmp.path(), &b, 7);
    let mut names: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for name in &names {
        let (x, y) = (
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
        );
        if x != y {
            return Check::new(false, format!("{name} differs between runs"));
        }
    }
    Check::new(
        names.len() == 7,
        format!("{} files byte-identical: {}", names.len(), names.join(", ")),
    )
}

/// Number of training normals with sim_norm >= sim_shuf before training and
/// after each epoch.
pub fn fit_counts(normal: &[BitHypervector], shuf: &[BitHypervector], epochs: usize) -> Vec<usize> {
    let count = |n: &RealHypervector, s: &RealHypervector| {
        normal
            .iter()
            .filter(|hv| cosine_similarity(hv, n).unwrap() >= cosine_similarity(hv, s).unwrap())
            .count()
    };
    let mut out = vec![count(
        &init_similarity(normal).unwrap(),
        &init_similarity(shuf).unwrap(),
    )];
    for e in 1..=epochs {
        let cfg = TrainConfig {
            epochs: e,
            ..TrainConfig::default()
        };
        let m = train(normal, shuf, &cfg).unwrap();
        out.push(count(&m.s_norm, &m.s_shuf));
    }
    out
}

/// Normals split evenly between two noisy prototypes; negatives come from
/// the same prototypes with a share `skew` drawn from the first, so for
/// `skew > 0.5` the first cluster starts out closer to the negative class.
pub fn two_cluster_task(
    dim: usize,
    n: usize,
    skew: f64,
    seed: u64,
) -> (Vec<BitHypervector>, Vec<BitHypervector>) {
    let mut rng = SeededRng::new(seed);
    let a = BitHypervector::random(dim, &mut rng).unwrap();
    let b = BitHypervector::random(dim, &mut rng).unwrap();
    let normal = (0..n)
        .map(|i| noisy_copy(if i % 2 == 0 { &a } else { &b }, 0.05, &mut rng))
        .collect();
    let shuf = (0..n)
        .map(|_| {
            let proto = if rng.gen_bool(skew) { &a } else { &b };
            noisy_copy(proto, 0.05, &mut rng)
        })
        .collect();
    (normal, shuf)
}
