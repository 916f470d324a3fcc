//! NSL-KDD ingestion and preprocessing.
//!
//! Files are headerless comma-separated text with 41 feature fields, the
//! attack label, and (in the distributed `+` files) a difficulty score.
//! Continuous columns are min-max scaled with training statistics;
//! categorical columns are integer-coded against a sorted vocabulary and
//! spread evenly over `[0, 1]`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub const NSL_KDD_FEATURES: [&str; 41] = [
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordSchema {
    pub feature_names: Vec<String>,
    pub categorical_indices: Vec<usize>,
    pub label_column: usize,
    pub difficulty_column: Option<usize>,
}

impl RecordSchema {
    pub fn nsl_kdd() -> Self {
        Self {
            feature_names: NSL_KDD_FEATURES.iter().map(|s| s.to_string()).collect(),
            categorical_indices: vec![1, 2, 3],
            label_column: 41,
            difficulty_column: Some(42),
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_categorical(&self, column: usize) -> bool {
        self.categorical_indices.contains(&column)
    }
}

impl Default for RecordSchema {
    fn default() -> Self {
        Self::nsl_kdd()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Anomalous,
}

impl Label {
    /// `"normal"` is the only benign label; every attack name is anomalous.
    pub fn from_source(label: &str) -> Self {
        if label.trim() == "normal" {
            Label::Normal
        } else {
            Label::Anomalous
        }
    }

    pub fn is_normal(self) -> bool {
        self == Label::Normal
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Label::Normal => "normal",
            Label::Anomalous => "anomalous",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub fields: Vec<String>,
    pub source_label: String,
    pub label: Label,
    pub difficulty: Option<u32>,
}

/// Parsed but not yet normalized file contents.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub source: String,
    pub records: Vec<RawRecord>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn load_nslkdd(path: impl AsRef<Path>, schema: &RecordSchema) -> Result<RawTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_nslkdd(file, &path.display().to_string(), schema)
}

/// Parses NSL-KDD text from any reader. `source` is used in error messages.
pub fn parse_nslkdd<R: Read>(reader: R, source: &str, schema: &RecordSchema) -> Result<RawTable> {
    let n = schema.n_features();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = Vec::new();
    for result in rdr.records() {
        let rec = result.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(source, io),
                other => Error::Parse {
                    path: source.to_string(),
                    line,
                    message: format!("{other:?}"),
                },
            }
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let expected_min = schema.label_column + 1;
        let expected_max = schema.difficulty_column.map_or(expected_min, |d| d + 1);
        if rec.len() < expected_min || rec.len() > expected_max {
            let expected = if expected_min == expected_max {
                expected_min.to_string()
            } else {
                format!("{expected_min} or {expected_max}")
            };
            return Err(Error::Arity {
                path: source.to_string(),
                line,
                expected,
                actual: rec.len(),
            });
        }
        let fields: Vec<String> = rec.iter().take(n).map(str::to_string).collect();
        let source_label = rec[schema.label_column].to_string();
        let difficulty = match schema.difficulty_column {
            Some(d) if d < rec.len() => Some(rec[d].parse::<u32>().map_err(|_| Error::Parse {
                path: source.to_string(),
                line,
                message: format!("difficulty {:?} is not an integer", &rec[d]),
            })?),
            _ => None,
        };
        records.push(RawRecord {
            fields,
            label: Label::from_source(&source_label),
            source_label,
            difficulty,
        });
    }
    Ok(RawTable {
        source: source.to_string(),
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureSpec {
    Continuous { min: f64, max: f64 },
    Categorical { vocabulary: Vec<String> },
}

impl FeatureSpec {
    /// Normalized value plus whether a categorical value was unseen.
    fn normalize(&self, raw: &str) -> std::result::Result<(f64, bool), String> {
        match self {
            FeatureSpec::Continuous { min, max } => {
                let v: f64 = raw
                    .parse()
                    .map_err(|_| format!("{raw:?} is not a number"))?;
                if !v.is_finite() {
                    return Err(format!("{raw:?} is not finite"));
                }
                if max <= min {
                    return Ok((0.0, false));
                }
                Ok((((v - min) / (max - min)).clamp(0.0, 1.0), false))
            }
            FeatureSpec::Categorical { vocabulary } => {
                match vocabulary.binary_search_by(|c| c.as_str().cmp(raw)) {
                    Ok(code) => {
                        let span = vocabulary.len().saturating_sub(1).max(1);
                        Ok((code as f64 / span as f64, false))
                    }
                    Err(_) => Ok((0.0, true)),
                }
            }
        }
    }
}

/// Min/max per continuous column and sorted vocabulary per categorical column.
pub fn fit_feature_specs(train: &RawTable, schema: &RecordSchema) -> Result<Vec<FeatureSpec>> {
    if train.is_empty() {
        return Err(Error::EmptyInput("training table"));
    }
    (0..schema.n_features())
        .map(|col| {
            if schema.is_categorical(col) {
                let mut vocabulary: Vec<String> = train
                    .records
                    .iter()
                    .map(|r| r.fields[col].clone())
                    .collect();
                vocabulary.sort();
                vocabulary.dedup();
                Ok(FeatureSpec::Categorical { vocabulary })
            } else {
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                for (row, r) in train.records.iter().enumerate() {
                    let v: f64 = r.fields[col]
                        .parse()
                        .ok()
                        .filter(|v: &f64| v.is_finite())
                        .ok_or_else(|| Error::Parse {
                            path: train.source.clone(),
                            line: row as u64 + 1,
                            message: format!(
                                "column {} ({}) value {:?} is not a finite number",
                                col, schema.feature_names[col], r.fields[col]
                            ),
                        })?;
                    min = min.min(v);
                    max = max.max(v);
                }
                Ok(FeatureSpec::Continuous { min, max })
            }
        })
        .collect()
}

/// Normalizes one row. Returns the values and how many categorical fields
/// were outside the fitted vocabulary (those map to 0.0).
pub fn normalize_record(fields: &[String], specs: &[FeatureSpec]) -> Result<(Vec<f64>, usize)> {
    if fields.len() != specs.len() {
        return Err(Error::Schema {
            expected: specs.len(),
            actual: fields.len(),
        });
    }
    let mut unseen = 0;
    let mut out = Vec::with_capacity(specs.len());
    for (col, (raw, spec)) in fields.iter().zip(specs).enumerate() {
        let (v, miss) = spec
            .normalize(raw)
            .map_err(|m| Error::InvalidConfig(format!("column {col}: {m}")))?;
        unseen += usize::from(miss);
        out.push(v);
    }
    Ok((out, unseen))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    pub source_labels: Vec<String>,
    pub difficulty: Vec<Option<u32>>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    fn select(&self, keep: impl Iterator<Item = usize>) -> Self {
        let mut out = LabeledDataset::default();
        for i in keep {
            out.rows.push(self.rows[i].clone());
            out.labels.push(self.labels[i]);
            out.source_labels.push(self.source_labels[i].clone());
            out.difficulty.push(self.difficulty[i]);
        }
        out
    }

    /// Writes the normalized rows with a header of feature names plus `label`.
    pub fn write_csv<W: Write>(&self, schema: &RecordSchema, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let to_err = |e: csv::Error| Error::InvalidConfig(format!("csv write: {e}"));
        let mut header: Vec<&str> = schema.feature_names.iter().map(String::as_str).collect();
        header.push("label");
        w.write_record(&header).map_err(to_err)?;
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(label.to_string());
            w.write_record(&rec).map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Normalizes a whole table, returning the dataset and the total number of
/// unseen categorical values encountered.
pub fn normalize_table(table: &RawTable, specs: &[FeatureSpec]) -> Result<(LabeledDataset, usize)> {
    let mut ds = LabeledDataset::default();
    let mut unseen = 0;
    for (row, rec) in table.records.iter().enumerate() {
        let (values, miss) = normalize_record(&rec.fields, specs).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::Parse {
                path: table.source.clone(),
                line: row as u64 + 1,
                message: m,
            },
            other => other,
        })?;
        unseen += miss;
        ds.rows.push(values);
        ds.labels.push(rec.label);
        ds.source_labels.push(rec.source_label.clone());
        ds.difficulty.push(rec.difficulty);
    }
    if unseen > 0 {
        warn!(
            "{}: {unseen} categorical values not in the training vocabulary (encoded as 0.0)",
            table.source
        );
    }
    Ok((ds, unseen))
}

pub fn extract_normal_subset(ds: &LabeledDataset) -> Result<LabeledDataset> {
    let keep: Vec<usize> = (0..ds.len())
        .filter(|&i| ds.labels[i].is_normal())
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyNormalSubset);
    }
    Ok(ds.select(keep.into_iter()))
}

/// Uniform sample of at most `cap` rows without replacement, original order kept.
pub fn sample_rows(ds: &LabeledDataset, cap: usize, rng: &mut SeededRng) -> LabeledDataset {
    if cap >= ds.len() {
        return ds.clone();
    }
    let mut keep = rand::seq::index::sample(rng, ds.len(), cap).into_vec();
    keep.sort_unstable();
    ds.select(keep.into_iter())
}

/// Permutes each column independently. Every output row is labeled
/// anomalous; the label is bookkeeping only.
pub fn column_shuffle(ds: &LabeledDataset, rng: &mut SeededRng) -> LabeledDataset {
    let n_rows = ds.len();
    let n_cols = ds.n_features();
    let mut rows = ds.rows.clone();
    let mut order: Vec<usize> = (0..n_rows).collect();
    for col in 0..n_cols {
        order.shuffle(rng);
        for (row, &src) in rows.iter_mut().zip(&order) {
            row[col] = ds.rows[src][col];
        }
    }
    LabeledDataset {
        rows,
        labels: vec![Label::Anomalous; n_rows],
        source_labels: vec!["shuffled".to_string(); n_rows],
        difficulty: vec![None; n_rows],
    }
}
