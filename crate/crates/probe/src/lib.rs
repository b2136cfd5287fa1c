//! Probing analyses over captured hidden-state activations.
//!
//! Datasets hold one `L × H` tensor per decision (or per question) with the
//! grid labels attached. On top of that sit the linear grid decoder and its
//! cross-encoding transfer matrix, per-unit feature scans with Bonferroni
//! control, the cross-encoding common-unit intersection with its shuffle
//! control, the question-task correlation test and ablation mask files.
//! [`synthetic`] builds planted-signal datasets with known answers.

pub mod dataset;
pub mod decoder;
mod error;
pub mod mask;
pub mod synthetic;
pub mod units;

pub use dataset::{ActivationDataset, DatasetManifest, Pooling, RecordEntry, RecordLabels};
pub use decoder::{cross_sir_matrix, fit_grid_decoder, split_dataset, DecoderScore, LayerSelection, Split};
pub use error::ProbeError;
pub use mask::AblationMask;
pub use units::{common_units, question_correlation, shuffle_control, unit_feature_scan, Feature, ScanResult, UnitSignificance};

pub type Result<T> = std::result::Result<T, ProbeError>;

/// One hidden-state coordinate.
pub type UnitId = (usize, usize);
