//! The tag baseline: lex PDF name tokens, keep the top TF-IDF tags and fit a
//! random forest, with the vocabulary size tuned on validation.
//!
//!     cargo run --release --example tag_baseline

use std::error::Error;

use chrono::NaiveDate;
use pdfcnn::baseline::{lex_tags, load_tag_samples, tfidf_table, tune_baseline, ForestParams, TOP_K_GRID};
use pdfcnn::corpus::{chronological_split, cutoffs_for_fractions, default_families, generate_synth_corpus, Split, SynthCorpusSpec};
use pdfcnn::metrics::{apply_threshold, detection_at_fpr};

fn main() -> Result<(), Box<dyn Error>> {
    println!("{:?}", lex_tags(b"<< /S /J#61vaScript /JS (app.alert(1)) >>"));

    let dir = tempfile::tempdir()?;
    let spec = SynthCorpusSpec {
        n_benign: 1000,
        n_malicious: 250,
        families: default_families(),
        date_range: (NaiveDate::from_ymd_opt(2018, 1, 1).unwrap(), NaiveDate::from_ymd_opt(2018, 12, 31).unwrap()),
        seed: 5,
    };
    let raw = generate_synth_corpus(&spec, dir.path())?;
    let (v, t) = cutoffs_for_fractions(&raw, 0.7, 0.15)?;
    let manifest = chronological_split(&raw, v, t, spec.seed)?;
    let load = |s| load_tag_samples(&manifest, Some(s));
    let (train, val, test) = (load(Split::Train)?, load(Split::Val)?, load(Split::Test)?);

    let hists: Vec<_> = train.iter().map(|s| s.tags.clone()).collect();
    let mut table: Vec<_> = tfidf_table(&hists).into_iter().collect();
    table.sort_by(|a, b| b.1 .0.total_cmp(&a.1 .0));
    println!("{} distinct tags; highest TF-IDF mass:", table.len());
    for (tag, (mass, idf)) in table.iter().take(10) {
        println!("  {tag:<20} mass {mass:8.1}  idf {idf:.3}");
    }

    let params = ForestParams { seed: 1, ..ForestParams::default() };
    let (model, grid) = tune_baseline(&train, &val, &TOP_K_GRID, &params, 0.01)?;
    for g in &grid {
        println!("k {:>3}: val detection {:.3}, Brier {:.4}", g.k, g.val_detection, g.val_brier);
    }
    let threshold = detection_at_fpr(&model.score_samples(&val)?, 0.01)?.threshold;
    let op = apply_threshold(&model.score_samples(&test)?, threshold);
    println!(
        "kept {} tags; test detection {:.3} at FPR {:.4}",
        model.vocabulary.len(),
        op.detection,
        op.fpr
    );
    Ok(())
}
