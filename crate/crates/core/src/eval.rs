//! Detection metrics, threshold sweeps and the published-baseline report.
//!
//! The positive class is `Anomalous`.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::hv::BitHypervector;
use crate::oneclass::SimilarityModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    fn add(&mut self, predicted: Label, actual: Label) {
        match (predicted, actual) {
            (Label::Anomalous, Label::Anomalous) => self.tp += 1,
            (Label::Anomalous, Label::Normal) => self.fp += 1,
            (Label::Normal, Label::Normal) => self.tn += 1,
            (Label::Normal, Label::Anomalous) => self.fn_ += 1,
        }
    }

    pub fn metrics(&self) -> Metrics {
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            accuracy: ratio(self.tp + self.tn, self.total()),
            precision,
            recall,
            f1,
            confusion: *self,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: ConfusionMatrix,
}

pub fn compute_metrics(predictions: &[Label], labels: &[Label]) -> Result<Metrics> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: predictions.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput("predictions"));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &a) in predictions.iter().zip(labels) {
        cm.add(p, a);
    }
    Ok(cm.metrics())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub points: Vec<SweepPoint>,
    /// Index into `points` of the highest accuracy (first one on ties).
    pub best: usize,
}

impl Sweep {
    pub fn best_point(&self) -> &SweepPoint {
        &self.points[self.best]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,accuracy,precision,recall,f1,tp,fp,tn,fn\n");
        for p in &self.points {
            let m = &p.metrics;
            let c = &m.confusion;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                p.threshold, m.accuracy, m.precision, m.recall, m.f1, c.tp, c.fp, c.tn, c.fn_
            );
        }
        out
    }
}

/// 101 evenly spaced thresholds over `[min, max]` of the scores.
pub fn default_grid(scores: &[f64]) -> Vec<f64> {
    let (lo, hi) = scores
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
            (lo.min(s), hi.max(s))
        });
    if !lo.is_finite() {
        return Vec::new();
    }
    linspace(lo, hi, 101)
}

/// Every distinct decision a strict threshold can make on `scores`: one
/// point below all scores, the midpoints between consecutive distinct
/// scores, and the maximum.
pub fn midpoint_grid(scores: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let (Some(&lo), Some(&hi)) = (sorted.first(), sorted.last()) else {
        return Vec::new();
    };
    let mut grid = Vec::with_capacity(sorted.len() + 1);
    grid.push(lo - 1.0);
    grid.extend(sorted.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    grid.push(hi);
    grid
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Threshold grid description accepted on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// 101 points over the observed score range.
    Default,
    /// `start:stop:count`, inclusive of both ends.
    Range { start: f64, stop: f64, count: usize },
    /// Explicit comma-separated thresholds.
    List(Vec<f64>),
    /// All midpoints between sorted scores; finds the exact best threshold.
    Midpoints,
}

impl GridSpec {
    pub fn resolve(&self, scores: &[f64]) -> Vec<f64> {
        match self {
            GridSpec::Default => default_grid(scores),
            GridSpec::Range { start, stop, count } => linspace(*start, *stop, *count),
            GridSpec::List(v) => v.clone(),
            GridSpec::Midpoints => midpoint_grid(scores),
        }
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |m: String| Error::InvalidConfig(format!("grid {s:?}: {m}"));
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("{t:?} is not a finite number")))
        };
        if s.is_empty() || s == "default" {
            return Ok(GridSpec::Default);
        }
        if s == "midpoints" {
            return Ok(GridSpec::Midpoints);
        }
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(bad("expected start:stop:count".into()));
            }
            let count: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| bad(format!("{:?} is not a count", parts[2])))?;
            if count == 0 {
                return Err(bad("count must be at least 1".into()));
            }
            return Ok(GridSpec::Range {
                start: num(parts[0])?,
                stop: num(parts[1])?,
                count,
            });
        }
        Ok(GridSpec::List(
            s.split(',').map(num).collect::<Result<_>>()?,
        ))
    }
}

/// Sweeps absolute thresholds over precomputed normal-class scores.
/// A record is predicted normal iff its score is strictly above the threshold.
pub fn sweep_scores(scores: &[f64], labels: &[Label], grid: &[f64]) -> Result<Sweep> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("threshold grid"));
    }
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::EmptyInput("scores"));
    }
    let points: Vec<SweepPoint> = grid
        .par_iter()
        .map(|&t| {
            let mut cm = ConfusionMatrix::default();
            for (&s, &a) in scores.iter().zip(labels) {
                let p = if s > t {
                    Label::Normal
                } else {
                    Label::Anomalous
                };
                cm.add(p, a);
            }
            SweepPoint {
                threshold: t,
                metrics: cm.metrics(),
            }
        })
        .collect();
    let best = points.iter().enumerate().fold(0, |best, (i, p)| {
        if p.metrics.accuracy > points[best].metrics.accuracy {
            i
        } else {
            best
        }
    });
    Ok(Sweep { points, best })
}

pub fn threshold_sweep(
    model: &SimilarityModel,
    encoded: &[BitHypervector],
    labels: &[Label],
    grid: &[f64],
) -> Result<Sweep> {
    let scores: Vec<f64> = model
        .score_all(encoded)?
        .into_iter()
        .map(|s| s.sim_norm)
        .collect();
    sweep_scores(&scores, labels, grid)
}

/// Named NSL-KDD evaluation splits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum Split {
    TrainPlus,
    TestPlus,
    Test21,
    Other(String),
}

impl Split {
    pub fn name(&self) -> &str {
        match self {
            Split::TrainPlus => "train+",
            Split::TestPlus => "test+",
            Split::Test21 => "test-21",
            Split::Other(s) => s,
        }
    }

    /// File-name-safe stem.
    pub fn stem(&self) -> String {
        match self {
            Split::TrainPlus => "train_plus".into(),
            Split::TestPlus => "test_plus".into(),
            Split::Test21 => "test_21".into(),
            Split::Other(s) => s
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                        c
                    } else {
                        '_'
                    }
                })
                .collect(),
        }
    }

    /// Accuracy (percent) reported for the proposed method on this split.
    pub fn published_target(&self) -> Option<f64> {
        match self {
            Split::TrainPlus => Some(TRAIN_PLUS_TARGET),
            Split::TestPlus => Some(PROPOSED.acc_test_plus),
            Split::Test21 => Some(PROPOSED.acc_test_21),
            Split::Other(_) => None,
        }
    }
}

impl From<String> for Split {
    fn from(s: String) -> Self {
        match s.trim().to_ascii_lowercase().as_str() {
            "train+" | "train" | "train_plus" | "kddtrain+" => Split::TrainPlus,
            "test+" | "test" | "test_plus" | "kddtest+" => Split::TestPlus,
            "test-21" | "test21" | "test_21" | "kddtest-21" => Split::Test21,
            _ => Split::Other(s),
        }
    }
}

impl From<&str> for Split {
    fn from(s: &str) -> Self {
        Split::from(s.to_string())
    }
}

impl From<Split> for String {
    fn from(s: Split) -> Self {
        s.name().to_string()
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselineRow {
    pub model_name: &'static str,
    pub acc_test_plus: f64,
    pub acc_test_21: f64,
}

const fn row(model_name: &'static str, acc_test_plus: f64, acc_test_21: f64) -> BaselineRow {
    BaselineRow {
        model_name,
        acc_test_plus,
        acc_test_21,
    }
}

/// Published accuracies (percent) on KDDTest+ and KDDTest-21.
pub const PUBLISHED_BASELINES: [BaselineRow; 7] = [
    row("J48", 81.05, 63.97),
    row("Naive Bayes", 76.56, 55.77),
    row("NB Tree", 82.02, 66.16),
    row("Random Forest", 80.67, 63.26),
    row("Random Tree", 81.59, 58.51),
    row("Multi-layer Perceptron", 77.41, 57.34),
    row("SVM", 69.52, 42.29),
];

/// The HDC one-class detector's own published row.
pub const PROPOSED: BaselineRow = row("Proposed (HDC one-class)", 86.21, 81.75);

/// Published KDDTrain+ accuracy (percent) for the HDC detector.
pub const TRAIN_PLUS_TARGET: f64 = 91.55;

pub fn best_baseline_test_plus() -> BaselineRow {
    PUBLISHED_BASELINES
        .iter()
        .copied()
        .fold(PUBLISHED_BASELINES[0], |a, b| {
            if b.acc_test_plus > a.acc_test_plus {
                b
            } else {
                a
            }
        })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasuredRow {
    pub split: Split,
    pub accuracy_pct: f64,
    pub target_pct: Option<f64>,
    pub delta_pct: Option<f64>,
    /// Published baselines on this split that the measured accuracy exceeds.
    pub beats: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineReport {
    pub baselines: Vec<BaselineRow>,
    pub proposed: BaselineRow,
    pub train_plus_target: f64,
    pub measured: Vec<MeasuredRow>,
}

/// Builds the comparison table. `measured` holds accuracy as a fraction in `[0, 1]`.
pub fn baseline_report(measured: &[(Split, f64)]) -> BaselineReport {
    let measured = measured
        .iter()
        .map(|(split, acc)| {
            let pct = acc * 100.0;
            let target = split.published_target();
            let beats = PUBLISHED_BASELINES
                .iter()
                .filter(|b| match split {
                    Split::TestPlus => pct > b.acc_test_plus,
                    Split::Test21 => pct > b.acc_test_21,
                    _ => false,
                })
                .map(|b| b.model_name.to_string())
                .collect();
            MeasuredRow {
                split: split.clone(),
                accuracy_pct: pct,
                target_pct: target,
                delta_pct: target.map(|t| pct - t),
                beats,
            }
        })
        .collect();
    BaselineReport {
        baselines: PUBLISHED_BASELINES.to_vec(),
        proposed: PROPOSED,
        train_plus_target: TRAIN_PLUS_TARGET,
        measured,
    }
}

impl BaselineReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<26} {:>8} {:>8}", "Model", "test+", "test-21");
        let _ = writeln!(out, "{}", "-".repeat(44));
        for b in self.baselines.iter().chain(std::iter::once(&self.proposed)) {
            let _ = writeln!(
                out,
                "{:<26} {:>8.2} {:>8.2}",
                b.model_name, b.acc_test_plus, b.acc_test_21
            );
        }
        let _ = writeln!(
            out,
            "{:<26} {:>8.2}",
            "Proposed on train+", self.train_plus_target
        );
        if !self.measured.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "{:<10} {:>9} {:>9} {:>8}",
                "Measured", "accuracy", "target", "delta"
            );
            for m in &self.measured {
                let (t, d) = match (m.target_pct, m.delta_pct) {
                    (Some(t), Some(d)) => (format!("{t:.2}"), format!("{d:+.2}")),
                    _ => ("-".into(), "-".into()),
                };
                let _ = writeln!(
                    out,
                    "{:<10} {:>9.2} {:>9} {:>8}",
                    m.split.name(),
                    m.accuracy_pct,
                    t,
                    d
                );
                if !m.beats.is_empty() {
                    let _ = writeln!(out, "  exceeds: {}", m.beats.join(", "));
                }
            }
        }
        out
    }
}
