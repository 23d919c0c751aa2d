//! Calibrates decision thresholds on validation at several false-positive
//! budgets, then applies them unchanged to the later test split.
//!
//!     cargo run --release --example evaluate_thresholds -- [out_dir]

use std::error::Error;
use std::path::PathBuf;

use chrono::NaiveDate;
use pdfcnn::corpus::{chronological_split, cutoffs_for_fractions, default_families, generate_synth_corpus, Split, SynthCorpusSpec};
use pdfcnn::metrics::{apply_threshold, detection_at_fpr, roc};
use pdfcnn::models::{ArchSpec, ArchitectureId};
use pdfcnn::plot::{line_chart_svg, write_svg, Bounds, Series};
use pdfcnn::training::{score_samples, train_ensemble, TrainConfig};

const INPUT_LEN: usize = pdfcnn::cli::DEFAULT_INPUT_LEN;

fn main() -> Result<(), Box<dyn Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("pdfcnn-eval"));
    let spec = SynthCorpusSpec {
        n_benign: 1000,
        n_malicious: 250,
        families: default_families(),
        date_range: (NaiveDate::from_ymd_opt(2018, 1, 1).unwrap(), NaiveDate::from_ymd_opt(2018, 12, 31).unwrap()),
        seed: 17,
    };
    let raw = generate_synth_corpus(&spec, &out.join("corpus"))?;
    let (v, t) = cutoffs_for_fractions(&raw, 0.7, 0.15)?;
    let manifest = chronological_split(&raw, v, t, spec.seed)?;
    let load = |s| manifest.load_samples(Some(s), INPUT_LEN);
    let (train, val, test) = (load(Split::Train)?, load(Split::Val)?, load(Split::Test)?);

    let config = TrainConfig {
        epochs: 5,
        ..TrainConfig::new(ArchSpec::desk(ArchitectureId::A, INPUT_LEN))
    };
    let (ensemble, _) = train_ensemble(&config, 2, &train, &val)?;
    let scorer = ensemble.scorer()?;
    let val_scores = score_samples(&scorer, &val)?;
    let test_scores = score_samples(&scorer, &test)?;

    println!("budget  threshold  val_det  test_det  test_fpr");
    for budget in [0.01, 0.005, 0.002] {
        let calibrated = detection_at_fpr(&val_scores, budget)?;
        let frozen = apply_threshold(&test_scores, calibrated.threshold);
        println!(
            "{budget:<7} {:<10.4} {:<8.3} {:<9.3} {:.4}",
            calibrated.threshold, calibrated.detection, frozen.detection, frozen.fpr
        );
    }

    let mut series = Vec::new();
    for (name, scores) in [("val", &val_scores), ("test", &test_scores)] {
        let curve = roc(scores)?;
        println!("{name} AUC {:.4}", curve.auc());
        curve.write_csv(&out.join(format!("roc_{name}.csv")))?;
        series.push(Series {
            name: name.to_string(),
            points: curve.points.iter().map(|p| (p.fpr, p.detection)).collect(),
        });
    }
    let bounds = Bounds { x: (0.0, 1.0), y: (0.0, 1.0) };
    write_svg(&out.join("roc.svg"), &line_chart_svg("ROC", "false positive rate", "detection", &series, Some(bounds)))?;
    println!("wrote {}", out.join("roc.svg").display());
    Ok(())
}
