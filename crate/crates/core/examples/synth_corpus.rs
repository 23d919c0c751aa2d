//! Generates a small synthetic corpus, splits it chronologically and prints
//! how the families and splits came out.
//!
//!     cargo run --example synth_corpus -- [out_dir]

use std::collections::BTreeMap;
use std::error::Error;
use std::path::PathBuf;

use chrono::NaiveDate;
use pdfcnn::corpus::{
    check_pdf_structure, chronological_split, cutoffs_for_fractions, default_families, generate_synth_corpus, Split,
    SynthCorpusSpec, SYNTH_VENDOR,
};

fn main() -> Result<(), Box<dyn Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("pdfcnn-synth"));
    let spec = SynthCorpusSpec {
        n_benign: 200,
        n_malicious: 60,
        families: default_families(),
        date_range: (NaiveDate::from_ymd_opt(2018, 1, 1).unwrap(), NaiveDate::from_ymd_opt(2018, 12, 31).unwrap()),
        seed: 7,
    };
    let raw = generate_synth_corpus(&spec, &out)?;
    let (val_cutoff, test_cutoff) = cutoffs_for_fractions(&raw, 0.7, 0.15)?;
    let manifest = chronological_split(&raw, val_cutoff, test_cutoff, spec.seed)?;
    manifest.write_csv(&out.join("manifest.csv"))?;
    println!("{} files in {}", manifest.len(), out.display());
    println!("val from {val_cutoff}, test from {test_cutoff}");

    let mut table: BTreeMap<(String, Split), usize> = BTreeMap::new();
    for e in manifest.entries() {
        let family = e.families.get(SYNTH_VENDOR).cloned().unwrap_or_else(|| "benign".into());
        *table.entry((family, e.split.expect("split assigned"))).or_default() += 1;
    }
    for ((family, split), n) in table {
        println!("{family:>10} {:>5} {n:4}", split.to_string());
    }

    let broken = manifest
        .entries()
        .iter()
        .filter(|e| check_pdf_structure(&std::fs::read(manifest.resolve(e)).unwrap()).is_err())
        .count();
    println!("structurally invalid files: {broken}");
    Ok(())
}
