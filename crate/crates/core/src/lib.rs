//! Hyperdimensional one-class anomaly detection for network connection
//! records.
//!
//! Records are encoded into packed binary hypervectors (feature identity
//! bound to a quantized value level, bundled by majority). A pair of
//! real-valued class vectors, one for normal traffic and one for its
//! column-shuffled copy, is refined online and used to label new records.
//!
//! Module map:
//!
//! - [`hv`]: packed bit vectors, accumulators, real class vectors, cosine.
//! - [`encoder`]: base table, level ladder, quantization, record encoding.
//! - [`dataset`]: NSL-KDD loading, normalization, normal subset, shuffling.
//! - [`oneclass`]: class-vector training and classification.
//! - [`eval`]: metrics, threshold sweeps, published-baseline comparison.
//! - [`pipeline`]: run configuration, model files, reports.
//! - [`synth`]: synthetic records and hypervectors for tests and benchmarks.

pub mod dataset;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod hv;
pub mod oneclass;
pub mod pipeline;
pub mod rng;
pub mod synth;

pub use dataset::{FeatureSpec, Label, LabeledDataset, RawTable, RecordSchema};
pub use encoder::{EncoderConfig, EncoderModel};
pub use error::{Error, Result};
pub use eval::{ConfusionMatrix, GridSpec, Metrics, Split, Sweep};
pub use hv::{BitHypervector, IntAccumulator, RealHypervector, Sign};
pub use oneclass::{DecisionMode, Scores, SimilarityModel, TrainConfig};
pub use pipeline::{Detector, ModelFile, RunConfig};
pub use rng::SeededRng;
