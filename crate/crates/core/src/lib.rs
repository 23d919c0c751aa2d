//! Byte-level convolutional malware detection for PDF files.
//!
//! The crate is organised as a pipeline:
//!
//! - [`corpus`]: manifests, chronological splitting, raw byte loading and a
//!   synthetic PDF corpus generator.
//! - [`layers`]: the handful of differentiable layers the networks need.
//! - [`models`]: the three convolutional architectures, checkpoints and scoring.
//! - [`training`]: Adam, early stopping on validation detection, ensembles.
//! - [`metrics`]: confusion counts, ROC curves and detection at a fixed FPR.
//! - [`baseline`]: PDF name-token lexer, TF-IDF selection and a random forest.
//! - [`clustering`]: HDBSCAN over pooled features plus homogeneity/completeness.
//! - [`cli`]: the `pdfcnn` command-line front end.

pub mod baseline;
pub mod cli;
pub mod clustering;
pub mod corpus;
pub mod layers;
pub mod metrics;
pub mod models;
pub mod plot;
pub mod seed;
pub mod training;

pub use corpus::{ByteSequence, DatasetManifest, Label, INPUT_LEN};
pub use metrics::ScoredSample;
pub use models::{ArchSpec, ArchitectureId, ModelCheckpoint, Network};
pub use training::{Ensemble, TrainConfig};
