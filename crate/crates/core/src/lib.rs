//! Agreement analysis between in-ear EEG and polysomnography sleep recordings.
//!
//! Numeric kernels are generic over [`Real`] (`f32` or `f64`); the aliases at the
//! bottom fix the scalar for callers that do not care.

pub mod catalog;
pub mod channel;
pub mod consensus;
pub mod error;
pub mod features;
pub mod hypnogram;
pub mod ingest;
pub mod linalg;
pub mod scalar;
pub mod selection;
pub mod signal;
pub mod similarity;
pub mod stage;
pub mod stats;

pub use catalog::{FeatureCatalog, FeatureDataset, FEATURE_NAMES, N_FEATURES};
pub use channel::{ChannelId, INEAR_CHANNEL, PSG_CHANNELS};
pub use error::{Error, Result};
pub use hypnogram::{Hypnogram, Source};
pub use linalg::Matrix;
pub use scalar::Real;
pub use selection::SelectionResult;
pub use signal::{EpochGrid, SignalTrace, EPOCH_SECONDS};
pub use similarity::{FsiMode, PdfEstimate, SimilarityConfig};
pub use stage::{collapse_label, Stage3, StageLabel};

pub type FeatureDataset64 = FeatureDataset<f64>;
pub type FeatureDataset32 = FeatureDataset<f32>;
pub type Matrix64 = Matrix<f64>;
pub type SignalTrace64 = SignalTrace<f64>;
pub type PdfEstimate64 = PdfEstimate<f64>;
pub type SelectionResult64 = SelectionResult<f64>;
pub type PsdEstimate64 = features::PsdEstimate<f64>;
