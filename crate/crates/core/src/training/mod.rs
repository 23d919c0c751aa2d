//! Adam, the epoch loop with validation-driven early stopping, and ensembles.

mod adam;
mod ensemble;
mod trainer;

use std::path::PathBuf;

use thiserror::Error;

use crate::metrics::MetricsError;
use crate::models::ModelError;

pub use adam::Adam;
pub use ensemble::{ensemble_score, score_samples, train_ensemble, Ensemble, EnsembleScorer, ENSEMBLE_DESCRIPTOR};
pub use trainer::{select_epoch, train_one, write_epoch_log, EpochRecord, TrainConfig, TrainOutcome};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("loss diverged at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },
    #[error("ensemble member {index}: {source}")]
    Member {
        index: usize,
        #[source]
        source: Box<TrainError>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("failed to access {path}: {detail}")]
    Io { path: PathBuf, detail: String },
}
