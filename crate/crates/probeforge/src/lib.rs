//! Evaluation harness for linear probes on precomputed foundation-model
//! chip embeddings.
//!
//! The pipeline is: load (or synthesize) a chip table and per-model
//! embedding matrices, draw training sets with one of four samplers, fit a
//! minimum-norm least-squares probe per land-cover class, score it on a
//! randomly sampled test set, and repeat with fresh samples so that both the
//! mean and the spread of the correlation coefficient are known. The
//! [`runner`] module drives whole ablation grids of such experiments and the
//! [`report`] module turns the results file into heatmaps, scatter data and
//! threshold-based selection tables.

pub mod dataset;
pub mod domain;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod probe;
pub mod report;
pub mod runner;
pub mod sampling;
pub mod seed;

pub use dataset::{assemble_dataset, validate_dataset, Dataset, ValidationReport, Violation};
pub use domain::{Chip, ChipTable, ClassId, EmbeddingSet, FmDescriptor, Fractions, Modality};
pub use error::{Error, Result};
pub use probe::Probe;
pub use sampling::SamplerKind;
