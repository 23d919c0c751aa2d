//! Synthetic corpora split chronologically, loaded and ready to train on.

use chrono::NaiveDate;
use pdfcnn::corpus::{
    chronological_split, cutoffs_for_fractions, default_families, generate_synth_corpus, DatasetManifest,
    LabeledSample, Split, SynthCorpusSpec, SynthFamily,
};
use tempfile::TempDir;

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub struct SplitCorpus {
    pub dir: TempDir,
    pub manifest: DatasetManifest,
    pub cutoffs: (NaiveDate, NaiveDate),
    pub train: Vec<LabeledSample>,
    pub val: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
}

pub fn spec(n_benign: usize, n_malicious: usize, families: Vec<SynthFamily>, seed: u64) -> SynthCorpusSpec {
    SynthCorpusSpec {
        n_benign,
        n_malicious,
        families,
        date_range: (date(2018, 1, 1), date(2018, 12, 31)),
        seed,
    }
}

/// Generates, splits 70/15/15 by date and loads at `input_len`.
pub fn split_corpus(n_benign: usize, n_malicious: usize, seed: u64, input_len: usize) -> SplitCorpus {
    let dir = tempfile::tempdir().unwrap();
    let raw = generate_synth_corpus(&spec(n_benign, n_malicious, default_families(), seed), dir.path()).unwrap();
    let cutoffs = cutoffs_for_fractions(&raw, 0.7, 0.15).unwrap();
    let manifest = chronological_split(&raw, cutoffs.0, cutoffs.1, seed).unwrap();
    manifest.write_csv(&dir.path().join("manifest.csv")).unwrap();
    let load = |s| manifest.load_samples(Some(s), input_len).unwrap();
    SplitCorpus {
        train: load(Split::Train),
        val: load(Split::Val),
        test: load(Split::Test),
        dir,
        manifest,
        cutoffs,
    }
}
