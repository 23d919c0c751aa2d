//! Trains a three-member ModelA ensemble on a synthetic corpus and saves it.
//!
//!     cargo run --release --example train_detector -- [out_dir]
//!
//! The saved directory loads with `Ensemble::load` and works with the
//! `pdfcnn eval` and `pdfcnn scan` subcommands.

use std::error::Error;
use std::path::PathBuf;

use chrono::NaiveDate;
use pdfcnn::corpus::{chronological_split, cutoffs_for_fractions, default_families, generate_synth_corpus, Split, SynthCorpusSpec};
use pdfcnn::models::{ArchSpec, ArchitectureId};
use pdfcnn::training::{train_ensemble, write_epoch_log, TrainConfig};

const INPUT_LEN: usize = pdfcnn::cli::DEFAULT_INPUT_LEN;

fn main() -> Result<(), Box<dyn Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("pdfcnn-train"));
    let spec = SynthCorpusSpec {
        n_benign: 1000,
        n_malicious: 250,
        families: default_families(),
        date_range: (NaiveDate::from_ymd_opt(2018, 1, 1).unwrap(), NaiveDate::from_ymd_opt(2018, 12, 31).unwrap()),
        seed: 3,
    };
    let raw = generate_synth_corpus(&spec, &out.join("corpus"))?;
    let (v, t) = cutoffs_for_fractions(&raw, 0.7, 0.15)?;
    let manifest = chronological_split(&raw, v, t, spec.seed)?;
    manifest.write_csv(&out.join("corpus").join("manifest.csv"))?;
    let train = manifest.load_samples(Some(Split::Train), INPUT_LEN)?;
    let val = manifest.load_samples(Some(Split::Val), INPUT_LEN)?;

    let config = TrainConfig {
        epochs: 5,
        seed: 1,
        ..TrainConfig::new(ArchSpec::desk(ArchitectureId::A, INPUT_LEN))
    };
    let (ensemble, logs) = train_ensemble(&config, 3, &train, &val)?;
    for (i, (member, log)) in ensemble.members().iter().zip(&logs).enumerate() {
        for r in log {
            println!(
                "member {i} epoch {} loss {:.4} val detection@1% {:.3}",
                r.epoch, r.train_loss, r.val_detection_at_1pct
            );
        }
        println!("member {i} keeps epoch {}", member.metadata.selected_epoch);
        write_epoch_log(&out.join(format!("member_{i:02}_log.csv")), log)?;
    }
    let descriptor = ensemble.save(&out.join("ensemble"))?;
    println!("saved {}", descriptor.display());
    Ok(())
}
