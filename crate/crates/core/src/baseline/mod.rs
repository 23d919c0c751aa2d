//! Tag-based comparison model: PDF name-token lexer, TF-IDF tag selection and
//! a random forest over the selected tag counts.

mod container;
mod forest;
mod lexer;
mod tfidf;

use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{DatasetManifest, Label, Split};
use crate::metrics::{detection_at_fpr, MetricsError, ScoredSample};

pub use container::BASELINE_MAGIC;
pub use forest::{forest_fit, forest_score, ForestModel, ForestParams, Node, Tree};
pub use lexer::{lex_tags, TagHistogram};
pub use tfidf::{fit_vocabulary, tfidf_table, FeatureVocabulary};

/// Vocabulary sizes tried during tuning.
pub const TOP_K_GRID: [usize; 4] = [50, 100, 168, 300];

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("invalid baseline configuration: {0}")]
    Config(String),
    #[error("feature vector has {found} entries, model expects {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("corrupt baseline file: {0}")]
    Corrupt(String),
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// A tag histogram with its ground truth.
#[derive(Debug, Clone)]
pub struct TagSample {
    pub id: String,
    pub label: Label,
    pub tags: TagHistogram,
}

/// Lexes every entry of `split` from the whole file (no truncation).
pub fn load_tag_samples(manifest: &DatasetManifest, split: Option<Split>) -> Result<Vec<TagSample>, BaselineError> {
    let entries: Vec<_> = manifest
        .entries()
        .iter()
        .filter(|e| split.is_none() || e.split == split)
        .collect();
    entries
        .par_iter()
        .map(|e| {
            let path = manifest.resolve(e);
            let bytes = std::fs::read(&path).map_err(|source| BaselineError::Io { path, source })?;
            Ok(TagSample {
                id: e.id(),
                label: e.label,
                tags: lex_tags(&bytes),
            })
        })
        .collect()
}

/// Vocabulary plus forest: everything needed to score a file.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub vocabulary: FeatureVocabulary,
    pub forest: ForestModel,
}

impl BaselineModel {
    pub fn fit(train: &[TagSample], k: usize, params: &ForestParams) -> Result<Self, BaselineError> {
        let hists: Vec<TagHistogram> = train.iter().map(|s| s.tags.clone()).collect();
        let vocabulary = fit_vocabulary(&hists, k)?;
        let x: Vec<Vec<f64>> = hists.iter().map(|h| vocabulary.vectorize(h)).collect();
        let labels: Vec<Label> = train.iter().map(|s| s.label).collect();
        let forest = forest_fit(&x, &labels, params)?;
        Ok(BaselineModel { vocabulary, forest })
    }

    pub fn score_tags(&self, tags: &TagHistogram) -> Result<f64, BaselineError> {
        forest_score(&self.forest, &self.vocabulary.vectorize(tags))
    }

    pub fn score_bytes(&self, bytes: &[u8]) -> Result<f64, BaselineError> {
        self.score_tags(&lex_tags(bytes))
    }

    pub fn score_samples(&self, samples: &[TagSample]) -> Result<Vec<ScoredSample>, BaselineError> {
        samples
            .par_iter()
            .map(|s| Ok(ScoredSample::new(s.id.clone(), s.label, self.score_tags(&s.tags)?)?))
            .collect()
    }
}

/// Validation results of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub k: usize,
    pub val_detection: f64,
    /// Mean squared error of the scores against 0/1 labels.
    pub val_brier: f64,
}

fn brier(scored: &[ScoredSample]) -> f64 {
    let total: f64 = scored
        .iter()
        .map(|s| {
            let y = if s.label == Label::Malicious { 1.0 } else { 0.0 };
            (s.score - y).powi(2)
        })
        .sum();
    total / scored.len() as f64
}

/// Fits one model per vocabulary size in `grid` and keeps the one with the
/// best validation detection at `fpr`. Ties go to the lower validation Brier
/// score, then to the smaller vocabulary.
pub fn tune_baseline(
    train: &[TagSample],
    val: &[TagSample],
    grid: &[usize],
    params: &ForestParams,
    fpr: f64,
) -> Result<(BaselineModel, Vec<GridResult>), BaselineError> {
    let mut sorted = grid.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() {
        return Err(BaselineError::Empty("top-k grid"));
    }
    let mut results = Vec::with_capacity(sorted.len());
    let mut best: Option<(f64, f64, BaselineModel)> = None;
    for k in sorted {
        let model = BaselineModel::fit(train, k, params)?;
        let scored = model.score_samples(val)?;
        let det = detection_at_fpr(&scored, fpr)?.detection;
        let b = brier(&scored);
        results.push(GridResult { k, val_detection: det, val_brier: b });
        let better = best
            .as_ref()
            .map_or(true, |(d, bb, _)| det > *d || (det == *d && b < *bb));
        if better {
            best = Some((det, b, model));
        }
    }
    Ok((best.expect("grid is non-empty").2, results))
}
