//! Dataset manifests, chronological splits, raw-byte loading and the
//! synthetic PDF corpus generator.

mod bytes;
mod manifest;
mod pdfcheck;
mod split;
mod synth;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bytes::{load_bytes, ByteSequence, LabeledSample, INPUT_LEN};
pub use manifest::{DatasetManifest, ManifestEntry};
pub use pdfcheck::check_pdf_structure;
pub use split::{chronological_split, cutoffs_for_fractions, largest_remainder};
pub use synth::{
    default_families, drift_family, generate_synth_corpus, motif_catalog, SynthCorpusSpec,
    SynthFamily, SYNTH_VENDOR,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Load {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("manifest csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid split request: {0}")]
    Split(String),
    #[error("invalid synthetic corpus spec: {0}")]
    Spec(String),
}

/// Ground-truth class. Malware is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Malicious,
}

impl Label {
    pub fn is_malicious(self) -> bool {
        self == Label::Malicious
    }

    /// Binary target for the sigmoid output.
    pub fn target(self) -> f64 {
        match self {
            Label::Benign => 0.0,
            Label::Malicious => 1.0,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Benign => "benign",
            Label::Malicious => "malicious",
        })
    }
}

impl FromStr for Label {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "benign" => Ok(Label::Benign),
            "malicious" => Ok(Label::Malicious),
            other => Err(CorpusError::Manifest(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(CorpusError::Manifest(format!("unknown split {other:?}"))),
        }
    }
}
