//! Scores files with a saved ensemble, like `pdfcnn scan`.
//!
//!     cargo run --release --example scan_files -- <ensemble_dir> <file>...
//!
//! `train_detector` writes a suitable ensemble directory.

use std::error::Error;
use std::path::Path;

use pdfcnn::ByteSequence;
use pdfcnn::training::Ensemble;

fn main() -> Result<(), Box<dyn Error>> {
    let mut args = std::env::args().skip(1);
    let Some(ensemble) = args.next() else {
        eprintln!("usage: scan_files <ensemble_dir> <file>...");
        std::process::exit(1);
    };
    let ensemble = Ensemble::load(Path::new(&ensemble))?;
    let scorer = ensemble.scorer()?;
    println!("model {} x{}, input {} bytes", ensemble.arch(), ensemble.len(), scorer.input_len());
    for path in args {
        let bytes = ByteSequence::load(Path::new(&path), scorer.input_len())?;
        let members = scorer.member_scores(&bytes)?;
        let mean = scorer.score(&bytes)?;
        let spread = members.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - members.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("{path}: {mean:.4} (member spread {spread:.4})");
    }
    Ok(())
}
