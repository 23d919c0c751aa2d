//! Family clustering over pooled ModelB features: HDBSCAN, per-cluster
//! homogeneity / completeness / detection against vendor labelings, and a
//! PCA projection for plotting.

mod hdbscan;
mod projection;
mod report;
mod scores;

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{DatasetManifest, LabeledSample};
use crate::models::{ArchitectureId, ModelCheckpoint, ModelError};

pub use hdbscan::{
    condense, core_distances, hdbscan, mutual_reachability, pairwise_distances, prim_mst, select_clusters,
    single_linkage, Child, CondensedEdge, CondensedTree, HdbscanResult, Merge, MstEdge,
};
pub use projection::{project_2d, Projection};
pub use report::{read_feature_csv, write_assignment_csv, write_metrics_csv, write_projection_csv};
pub use scores::{cluster_detection, cluster_stats, completeness, homogeneity, ClusterStats, CompletenessScope};

/// Default HDBSCAN minimum cluster size.
pub const DEFAULT_MIN_CLUSTER_SIZE: usize = 10;

/// Family string vendors use for files they do not flag.
pub const UNDETECTED: &str = "undetected";

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("feature extraction needs a ModelB checkpoint, got model {0}")]
    WrongArch(ArchitectureId),
    #[error("invalid clustering input: {0}")]
    Config(String),
    #[error("assignment covers {assignment} samples, labeling covers {labeling}")]
    Coverage { assignment: usize, labeling: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("failed to access {path}: {detail}")]
    Io { path: PathBuf, detail: String },
}

/// n × d matrix of pooled features with one id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    ids: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    /// Rows must share one width and hold finite, non-negative values.
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, ClusterError> {
        if ids.len() != rows.len() {
            return Err(ClusterError::Config(format!("{} ids for {} rows", ids.len(), rows.len())));
        }
        if let Some(d) = rows.first().map(Vec::len) {
            if rows.iter().any(|r| r.len() != d) {
                return Err(ClusterError::Config("rows differ in width".into()));
            }
        }
        if rows.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ClusterError::Config("feature values must be finite and non-negative".into()));
        }
        Ok(FeatureMatrix { ids, rows })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

/// Pooled features of a ModelB checkpoint, one row per sample.
pub fn extract_features(checkpoint: &ModelCheckpoint, samples: &[LabeledSample]) -> Result<FeatureMatrix, ClusterError> {
    if checkpoint.arch() != ArchitectureId::B {
        return Err(ClusterError::WrongArch(checkpoint.arch()));
    }
    let net = checkpoint.to_network()?;
    let scorer = net.scorer();
    let rows = samples
        .par_iter()
        .map(|s| Ok(scorer.forward(s.bytes.data())?.features))
        .collect::<Result<Vec<_>, ModelError>>()?;
    FeatureMatrix::new(samples.iter().map(|s| s.id.clone()).collect(), rows)
}

/// Cluster id per sample (`None` = noise). Ids are `0..K`, numbered by each
/// cluster's smallest member index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    labels: Vec<Option<usize>>,
    n_clusters: usize,
}

impl ClusterAssignment {
    /// Renumbers arbitrary cluster ids by first appearance.
    pub fn from_labels(raw: Vec<Option<usize>>) -> Self {
        let mut map = BTreeMap::new();
        let labels: Vec<Option<usize>> = raw
            .iter()
            .map(|l| {
                l.map(|c| {
                    let next = map.len();
                    *map.entry(c).or_insert(next)
                })
            })
            .collect();
        ClusterAssignment {
            n_clusters: map.len(),
            labels,
        }
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters];
        for c in self.labels.iter().flatten() {
            sizes[*c] += 1;
        }
        sizes
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == Some(cluster)).collect()
    }
}

/// One vendor's family per sample; `None` means the vendor does not flag it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    pub vendor: String,
    pub families: Vec<Option<String>>,
}

impl Labeling {
    pub fn new(vendor: impl Into<String>, families: Vec<Option<String>>) -> Self {
        Labeling {
            vendor: vendor.into(),
            families,
        }
    }

    /// Families recorded under `vendor` for the given sample ids. Missing,
    /// empty and `undetected` cells count as undetected.
    pub fn from_manifest(manifest: &DatasetManifest, vendor: &str, ids: &[String]) -> Self {
        let by_id: BTreeMap<String, Option<String>> = manifest
            .entries()
            .iter()
            .map(|e| {
                let fam = e
                    .families
                    .get(vendor)
                    .filter(|f| !f.is_empty() && f.as_str() != UNDETECTED)
                    .cloned();
                (e.id(), fam)
            })
            .collect();
        Labeling {
            vendor: vendor.to_string(),
            families: ids.iter().map(|id| by_id.get(id).cloned().flatten()).collect(),
        }
    }
}
