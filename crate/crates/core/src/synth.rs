//! Deterministic synthetic data for tests, examples and benchmarks.

use std::fmt::Write as _;

use rand::Rng;

use crate::dataset::Label;
use crate::error::Result;
use crate::hv::BitHypervector;
use crate::rng::SeededRng;

/// Copy of `proto` with each bit flipped independently with probability `noise`.
pub fn noisy_copy(proto: &BitHypervector, noise: f64, rng: &mut SeededRng) -> BitHypervector {
    let mut out = proto.clone();
    for j in 0..proto.dim() {
        if rng.gen_bool(noise) {
            out.flip(j);
        }
    }
    out
}

/// One-prototype detection task: normal records are noisy copies of a
/// prototype, anomalies and synthetic negatives are independent random vectors.
#[derive(Debug, Clone)]
pub struct PrototypeTask {
    pub prototype: BitHypervector,
    pub normal_train: Vec<BitHypervector>,
    pub negative_train: Vec<BitHypervector>,
    pub test: Vec<BitHypervector>,
    pub test_labels: Vec<Label>,
}

pub fn prototype_task(
    dim: usize,
    n_train: usize,
    n_test_each: usize,
    noise: f64,
    seed: u64,
) -> Result<PrototypeTask> {
    let mut rng = SeededRng::new(seed);
    let prototype = BitHypervector::random(dim, &mut rng)?;
    let normal_train = (0..n_train)
        .map(|_| noisy_copy(&prototype, noise, &mut rng))
        .collect();
    let negative_train = (0..n_train)
        .map(|_| BitHypervector::random(dim, &mut rng))
        .collect::<Result<_>>()?;
    let mut test = Vec::with_capacity(2 * n_test_each);
    let mut test_labels = Vec::with_capacity(2 * n_test_each);
    for _ in 0..n_test_each {
        test.push(noisy_copy(&prototype, noise, &mut rng));
        test_labels.push(Label::Normal);
        test.push(BitHypervector::random(dim, &mut rng)?);
        test_labels.push(Label::Anomalous);
    }
    Ok(PrototypeTask {
        prototype,
        normal_train,
        negative_train,
        test,
        test_labels,
    })
}

/// NSL-KDD formatted text (43 fields per line) with `n_rows` records, about
/// `anomaly_fraction` of them attacks. Normal rows look like short web and
/// mail sessions; attacks look like SYN floods, ICMP floods and port scans.
pub fn nslkdd_like_text(n_rows: usize, anomaly_fraction: f64, seed: u64) -> String {
    let mut rng = SeededRng::new(seed);
    let mut out = String::new();
    for _ in 0..n_rows {
        let attack = rng.gen_bool(anomaly_fraction);
        let mut f = [0.0f64; 41];
        let (proto, service, flag, label) = if !attack {
            f[0] = rng.gen_range(0.0..5.0f64).floor();
            f[4] = rng.gen_range(100.0..2000.0f64).floor();
            f[5] = rng.gen_range(200.0..20000.0f64).floor();
            f[11] = 1.0;
            f[22] = rng.gen_range(1.0..20.0f64).floor();
            f[23] = rng.gen_range(1.0..20.0f64).floor();
            f[28] = rng.gen_range(0.8..1.0);
            f[31] = rng.gen_range(50.0..255.0f64).floor();
            f[32] = rng.gen_range(100.0..255.0f64).floor();
            f[33] = rng.gen_range(0.8..1.0);
            let service = ["http", "smtp", "ftp_data", "domain_u"][rng.gen_range(0..4)];
            let proto = if service == "domain_u" { "udp" } else { "tcp" };
            (proto, service, "SF", "normal")
        } else {
            match rng.gen_range(0..3) {
                0 => {
                    f[22] = rng.gen_range(100.0..511.0f64).floor();
                    f[23] = rng.gen_range(1.0..30.0f64).floor();
                    f[24] = 1.0;
                    f[25] = 1.0;
                    f[29] = rng.gen_range(0.0..0.1);
                    f[31] = 255.0;
                    f[32] = rng.gen_range(1.0..30.0f64).floor();
                    f[37] = 1.0;
                    f[38] = 1.0;
                    ("tcp", "private", "S0", "neptune")
                }
                1 => {
                    f[4] = rng.gen_range(500.0..1100.0f64).floor();
                    f[22] = 511.0;
                    f[23] = 511.0;
                    f[28] = 1.0;
                    f[31] = 255.0;
                    f[32] = 255.0;
                    ("icmp", "ecr_i", "SF", "smurf")
                }
                _ => {
                    f[22] = rng.gen_range(1.0..5.0f64).floor();
                    f[26] = 1.0;
                    f[27] = 1.0;
                    f[29] = 1.0;
                    f[31] = rng.gen_range(1.0..255.0f64).floor();
                    f[34] = rng.gen_range(0.5..1.0);
                    f[39] = 1.0;
                    let service = ["other", "private", "telnet"][rng.gen_range(0..3)];
                    ("tcp", service, "REJ", "portsweep")
                }
            }
        };
        let difficulty = rng.gen_range(5..22);
        for (i, v) in f.iter().enumerate() {
            match i {
                1 => out.push_str(proto),
                2 => out.push_str(service),
                3 => out.push_str(flag),
                _ => {
                    if v.fract() == 0.0 {
                        let _ = write!(out, "{}", *v as i64);
                    } else {
                        let _ = write!(out, "{v:.2}");
                    }
                }
            }
            out.push(',');
        }
        let _ = writeln!(out, "{label},{difficulty}");
    }
    out
}
