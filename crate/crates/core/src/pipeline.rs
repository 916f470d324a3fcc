//! End-to-end train and evaluate pipeline, model files and report files.
//!
//! Everything here is deterministic in `(RunConfig, input bytes)`. The model
//! file stores the seed rather than the base table and level ladder; both are
//! regenerated on load.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{
    column_shuffle, extract_normal_subset, fit_feature_specs, normalize_table, sample_rows,
    FeatureSpec, Label, RawTable, RecordSchema,
};
use crate::encoder::{EncoderConfig, EncoderModel, DEFAULT_DIM, DEFAULT_LEVELS};
use crate::error::{Error, Result};
use crate::eval::{
    baseline_report, compute_metrics, sweep_scores, BaselineReport, GridSpec, Metrics, Split, Sweep,
};
use crate::hv::{BitHypervector, RealHypervector};
use crate::oneclass::{
    train, DecisionMode, Scores, SimilarityModel, TrainConfig, DEFAULT_ALPHA, DEFAULT_EPOCHS,
};
use crate::rng::{streams, SeededRng};

pub const MODEL_FORMAT: &str = "hdx-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const REPORT_FORMAT_VERSION: u32 = 1;

/// All hyperparameters of a run. Paths are not part of the serialized
/// snapshot so outputs do not depend on where files live.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dim: usize,
    pub levels: usize,
    pub alpha: f64,
    pub epochs: usize,
    pub seed: u64,
    pub mode: DecisionMode,
    pub threshold: Option<f64>,
    pub normal_sample: Option<usize>,
    #[serde(default)]
    pub symmetric_updates: bool,
    #[serde(skip)]
    pub train: Option<PathBuf>,
    #[serde(skip)]
    pub test: Option<PathBuf>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            dim: DEFAULT_DIM,
            levels: DEFAULT_LEVELS,
            alpha: DEFAULT_ALPHA,
            epochs: DEFAULT_EPOCHS,
            seed,
            mode: DecisionMode::Comparative,
            threshold: None,
            normal_sample: None,
            symmetric_updates: false,
            train: None,
            test: None,
            out: None,
        }
    }

    /// Sets one option from its `key=value` spelling. Keys match the long
    /// command-line flags, with `-` and `_` interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        let bad = |what: &str| Error::InvalidConfig(format!("{key}: {value:?} is not {what}"));
        match key.as_str() {
            "dim" => self.dim = value.parse().map_err(|_| bad("a positive integer"))?,
            "levels" => self.levels = value.parse().map_err(|_| bad("a positive integer"))?,
            "alpha" => self.alpha = value.parse().map_err(|_| bad("a number"))?,
            "epochs" => self.epochs = value.parse().map_err(|_| bad("a positive integer"))?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| bad("an unsigned 64-bit integer"))?
            }
            "mode" => self.mode = value.parse()?,
            "threshold" => self.threshold = Some(value.parse().map_err(|_| bad("a number"))?),
            "normal-sample" => {
                self.normal_sample = Some(value.parse().map_err(|_| bad("a positive integer"))?)
            }
            "symmetric-updates" => {
                self.symmetric_updates = value.parse().map_err(|_| bad("true or false"))?
            }
            "train" => self.train = Some(PathBuf::from(value)),
            "test" => self.test = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(Error::InvalidConfig(format!("unknown option {other:?}"))),
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            alpha: self.alpha,
            epochs: self.epochs,
            mode: self.mode,
            threshold: self.threshold,
            symmetric_updates: self.symmetric_updates,
        }
    }

    pub fn encoder_config(&self, n_features: usize) -> EncoderConfig {
        EncoderConfig::new(self.dim, self.levels, n_features, self.seed)
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        self.encoder_config(n_features).validate()?;
        self.train_config().validate()?;
        if self.normal_sample == Some(0) {
            return Err(Error::InvalidConfig(
                "normal-sample must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// One `key = value` line per option, for report headers.
    pub fn header_lines(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dim = {}", self.dim);
        let _ = writeln!(s, "levels = {}", self.levels);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "mode = {}", self.mode);
        let _ = writeln!(
            s,
            "threshold = {}",
            self.threshold.map_or("none".to_string(), |t| t.to_string())
        );
        let _ = writeln!(
            s,
            "normal-sample = {}",
            self.normal_sample
                .map_or("all".to_string(), |n| n.to_string())
        );
        let _ = writeln!(s, "symmetric-updates = {}", self.symmetric_updates);
        s
    }
}

/// Parses a line-oriented `key=value` file. Blank lines and `#` comments
/// are skipped.
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                return None;
            }
            Some(match line.split_once('=') {
                Some((k, v)) => Ok((k.trim().to_string(), v.trim().to_string())),
                None => Err(Error::InvalidConfig(format!(
                    "config line {}: expected key=value, got {line:?}",
                    i + 1
                ))),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub format_version: u32,
    pub config: RunConfig,
    pub feature_specs: Vec<FeatureSpec>,
    pub s_norm: RealHypervector,
    pub s_shuf: RealHypervector,
    pub training_stats: Vec<usize>,
}

impl ModelFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: ModelFile = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        if m.format != MODEL_FORMAT {
            return Err(Error::Model(format!(
                "unexpected format tag {:?}",
                m.format
            )));
        }
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported format version {} (this build reads {MODEL_FORMAT_VERSION})",
                m.format_version
            )));
        }
        if m.s_norm.dim() != m.config.dim || m.s_shuf.dim() != m.config.dim {
            return Err(Error::Model(format!(
                "class vectors have dimension {}/{}, config says {}",
                m.s_norm.dim(),
                m.s_shuf.dim(),
                m.config.dim
            )));
        }
        m.config
            .validate(m.feature_specs.len())
            .map_err(|e| Error::Model(e.to_string()))?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Rebuilds the encoder from the stored seed and wraps the class vectors.
    pub fn detector(&self) -> Result<Detector> {
        let encoder = EncoderModel::build(self.config.encoder_config(self.feature_specs.len()))?
            .with_feature_specs(self.feature_specs.clone())?;
        Ok(Detector {
            encoder,
            model: SimilarityModel {
                s_norm: self.s_norm.clone(),
                s_shuf: self.s_shuf.clone(),
                config: self.config.train_config(),
                training_stats: self.training_stats.clone(),
            },
            config: self.config.clone(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Detector {
    pub encoder: EncoderModel,
    pub model: SimilarityModel,
    pub config: RunConfig,
}

#[derive(Debug, Clone)]
pub struct EncodedSplit {
    pub hypervectors: Vec<BitHypervector>,
    pub labels: Vec<Label>,
    pub unseen_categories: usize,
}

impl Detector {
    pub fn encode_table(&self, table: &RawTable) -> Result<EncodedSplit> {
        let specs = self.encoder.feature_specs();
        if let Some(r) = table.records.iter().find(|r| r.fields.len() != specs.len()) {
            return Err(Error::Schema {
                expected: specs.len(),
                actual: r.fields.len(),
            });
        }
        let (ds, unseen) = normalize_table(table, specs)?;
        Ok(EncodedSplit {
            hypervectors: self.encoder.encode_dataset(&ds.rows)?,
            labels: ds.labels,
            unseen_categories: unseen,
        })
    }

    /// Overrides the decision rule used by [`Detector::evaluate`].
    pub fn with_decision(mut self, mode: DecisionMode, threshold: Option<f64>) -> Result<Self> {
        self.model = self.model.with_decision(mode, threshold)?;
        self.config.mode = mode;
        if threshold.is_some() {
            self.config.threshold = threshold;
        }
        Ok(self)
    }

    pub fn evaluate(&self, table: &RawTable, split: Split, grid: &GridSpec) -> Result<EvalOutcome> {
        let encoded = self.encode_table(table)?;
        self.evaluate_encoded(&encoded, data_name(&table.source), split, grid)
    }

    pub fn evaluate_encoded(
        &self,
        encoded: &EncodedSplit,
        data: String,
        split: Split,
        grid: &GridSpec,
    ) -> Result<EvalOutcome> {
        let scores = self.model.score_all(&encoded.hypervectors)?;
        let predictions: Vec<Label> = scores.iter().map(|&s| self.model.decide(s)).collect();
        let metrics = compute_metrics(&predictions, &encoded.labels)?;

        let comparative: Vec<Label> = scores
            .iter()
            .map(|s| {
                if s.sim_norm >= s.sim_shuf {
                    Label::Normal
                } else {
                    Label::Anomalous
                }
            })
            .collect();
        let comparative_accuracy = compute_metrics(&comparative, &encoded.labels)?.accuracy;

        let sim_norm: Vec<f64> = scores.iter().map(|s| s.sim_norm).collect();
        let thresholds = grid.resolve(&sim_norm);
        let sweep = sweep_scores(&sim_norm, &encoded.labels, &thresholds)?;
        let best = *sweep.best_point();

        let report = EvalReport {
            format_version: REPORT_FORMAT_VERSION,
            config: self.config.clone(),
            data,
            split: split.clone(),
            n_records: encoded.labels.len(),
            unseen_categories: encoded.unseen_categories,
            decision: DecisionSummary {
                mode: self.model.config.mode,
                threshold: self.model.config.threshold,
            },
            metrics,
            comparative_accuracy,
            best_sweep_threshold: best.threshold,
            best_sweep_metrics: best.metrics,
            baseline: baseline_report(&[(split, metrics.accuracy)]),
        };
        Ok(EvalOutcome {
            report,
            sweep,
            scores,
        })
    }
}

fn data_name(source: &str) -> String {
    Path::new(source)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| source.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecisionSummary {
    pub mode: DecisionMode,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub config: RunConfig,
    pub data: String,
    pub split: Split,
    pub n_records: usize,
    pub unseen_categories: usize,
    pub decision: DecisionSummary,
    pub metrics: Metrics,
    pub comparative_accuracy: f64,
    pub best_sweep_threshold: f64,
    pub best_sweep_metrics: Metrics,
    pub baseline: BaselineReport,
}

impl EvalReport {
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# hdx evaluation report (format {})",
            self.format_version
        );
        s.push_str(&self.config.header_lines());
        let _ = writeln!(s, "data = {}", self.data);
        let _ = writeln!(s, "split = {}", self.split);
        let _ = writeln!(s);
        let _ = writeln!(s, "records            {}", self.n_records);
        let _ = writeln!(s, "unseen categories  {}", self.unseen_categories);
        let t = self
            .decision
            .threshold
            .map_or(String::new(), |t| format!(" (threshold {t})"));
        let _ = writeln!(s, "decision rule      {}{}", self.decision.mode, t);
        let m = &self.metrics;
        let c = &m.confusion;
        let _ = writeln!(s, "accuracy           {:.4}", m.accuracy);
        let _ = writeln!(s, "precision          {:.4}", m.precision);
        let _ = writeln!(s, "recall             {:.4}", m.recall);
        let _ = writeln!(s, "f1                 {:.4}", m.f1);
        let _ = writeln!(
            s,
            "confusion          tp={} fp={} tn={} fn={}",
            c.tp, c.fp, c.tn, c.fn_
        );
        let _ = writeln!(s, "comparative acc.   {:.4}", self.comparative_accuracy);
        let _ = writeln!(
            s,
            "best sweep         threshold {:.6} accuracy {:.4}",
            self.best_sweep_threshold, self.best_sweep_metrics.accuracy
        );
        let _ = writeln!(s);
        s.push_str(&self.baseline.render_text());
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub report: EvalReport,
    pub sweep: Sweep,
    pub scores: Vec<Scores>,
}

impl EvalOutcome {
    /// Writes `<stem>_report.txt`, `<stem>_report.json` and `<stem>_sweep.csv`.
    pub fn write(&self, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let out_dir = out_dir.as_ref();
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let stem = self.report.split.stem();
        let files = [
            (format!("{stem}_report.txt"), self.report.render_text()),
            (format!("{stem}_report.json"), self.report.to_json()),
            (format!("{stem}_sweep.csv"), self.sweep.to_csv()),
        ];
        files
            .into_iter()
            .map(|(name, body)| {
                let p = out_dir.join(name);
                fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
                Ok(p)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub n_records: usize,
    pub n_normal: usize,
    pub n_shuffled: usize,
    pub epoch_updates: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model_file: ModelFile,
    pub detector: Detector,
    pub summary: TrainSummary,
}

/// Fits normalization on the whole table, trains on its normal rows and
/// their column-shuffled copy.
pub fn train_from_table(
    cfg: &RunConfig,
    table: &RawTable,
    schema: &RecordSchema,
) -> Result<Trained> {
    cfg.validate(schema.n_features())?;
    let specs = fit_feature_specs(table, schema)?;
    let (full, _) = normalize_table(table, &specs)?;
    let mut normal = extract_normal_subset(&full)?;
    if let Some(cap) = cfg.normal_sample {
        normal = sample_rows(
            &normal,
            cap,
            &mut SeededRng::with_stream(cfg.seed, streams::NORMAL_SAMPLE),
        );
    }
    let shuffled = column_shuffle(
        &normal,
        &mut SeededRng::with_stream(cfg.seed, streams::COLUMN_SHUFFLE),
    );

    let encoder = EncoderModel::build(cfg.encoder_config(schema.n_features()))?
        .with_feature_specs(specs.clone())?;
    let normal_enc = encoder.encode_dataset(&normal.rows)?;
    let shuf_enc = encoder.encode_dataset(&shuffled.rows)?;
    let model = train(&normal_enc, &shuf_enc, &cfg.train_config())?;

    let model_file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        format_version: MODEL_FORMAT_VERSION,
        config: cfg.clone(),
        feature_specs: specs,
        s_norm: model.s_norm.clone(),
        s_shuf: model.s_shuf.clone(),
        training_stats: model.training_stats.clone(),
    };
    let summary = TrainSummary {
        n_records: table.len(),
        n_normal: normal.len(),
        n_shuffled: shuffled.len(),
        epoch_updates: model.training_stats.clone(),
    };
    Ok(Trained {
        model_file,
        detector: Detector {
            encoder,
            model,
            config: cfg.clone(),
        },
        summary,
    })
}
