//! Temporal drift: a detector calibrated on 2018 data meets a family that only
//! appears afterwards. The validation threshold stays frozen.
//!
//!     cargo run --release --example drift

use std::error::Error;

use chrono::NaiveDate;
use pdfcnn::corpus::{
    chronological_split, cutoffs_for_fractions, default_families, drift_family, generate_synth_corpus, Split, SynthCorpusSpec,
};
use pdfcnn::metrics::{apply_threshold, detection_at_fpr};
use pdfcnn::models::{ArchSpec, ArchitectureId};
use pdfcnn::training::{score_samples, train_ensemble, TrainConfig};

const INPUT_LEN: usize = pdfcnn::cli::DEFAULT_INPUT_LEN;

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn main() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let spec = SynthCorpusSpec {
        n_benign: 1000,
        n_malicious: 250,
        families: default_families(),
        date_range: (date(2018, 1, 1), date(2018, 12, 31)),
        seed: 13,
    };
    let raw = generate_synth_corpus(&spec, &dir.path().join("in_period"))?;
    let (v, t) = cutoffs_for_fractions(&raw, 0.7, 0.15)?;
    let manifest = chronological_split(&raw, v, t, spec.seed)?;
    let load = |s| manifest.load_samples(Some(s), INPUT_LEN);
    let (train, val, test) = (load(Split::Train)?, load(Split::Val)?, load(Split::Test)?);

    let config = TrainConfig::new(ArchSpec::desk(ArchitectureId::A, INPUT_LEN));
    let (ensemble, _) = train_ensemble(&config, 2, &train, &val)?;
    let scorer = ensemble.scorer()?;
    let threshold = detection_at_fpr(&score_samples(&scorer, &val)?, 0.01)?.threshold;
    let in_period = apply_threshold(&score_samples(&scorer, &test)?, threshold);

    // Files of a family nobody trained on, dated after the test cutoff.
    let mut late = drift_family();
    late.window = Some((t, date(2019, 3, 31)));
    let later = SynthCorpusSpec {
        n_benign: 50,
        n_malicious: 150,
        families: vec![late],
        date_range: (t, date(2019, 3, 31)),
        seed: 99,
    };
    let late_manifest = generate_synth_corpus(&later, &dir.path().join("late"))?;
    let late_samples = late_manifest.load_samples(None, INPUT_LEN)?;
    let unseen = apply_threshold(&score_samples(&scorer, &late_samples)?, threshold);

    println!("frozen threshold {threshold:.4}");
    println!("in-period test detection {:.3} (FPR {:.4})", in_period.detection, in_period.fpr);
    println!("unseen family detection  {:.3} (FPR {:.4})", unseen.detection, unseen.fpr);
    Ok(())
}
