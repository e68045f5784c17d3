//! File formats, label-raster processing, seasonal compositing and
//! synthetic dataset generation.

pub mod chips;
pub mod embeddings;
pub mod manifest;
pub mod raster;
pub mod synth;

pub use chips::{load_chip_table, save_chip_table};
pub use embeddings::{load_embeddings, save_embeddings};
pub use manifest::{DataManifest, ManifestFm};
pub use raster::{compute_class_fractions, seasonal_median_composite, CodeMap, ImageStack, LabelGrid, Season};
pub use synth::{synthesize_dataset, SynthDataset, SynthSpec};
