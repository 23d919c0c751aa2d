//! Groups malware by the pooled features of a trained ModelB with HDBSCAN and
//! scores each cluster against the planted family labels.
//!
//!     cargo run --release --example cluster_families -- [out_dir]

use std::error::Error;
use std::path::PathBuf;

use chrono::NaiveDate;
use pdfcnn::clustering::{
    cluster_stats, extract_features, hdbscan, project_2d, write_assignment_csv, write_metrics_csv, CompletenessScope, Labeling,
};
use pdfcnn::corpus::{
    chronological_split, cutoffs_for_fractions, default_families, generate_synth_corpus, Split, SynthCorpusSpec, SYNTH_VENDOR,
};
use pdfcnn::models::{ArchSpec, ArchitectureId};
use pdfcnn::plot::{scatter_svg, write_svg};
use pdfcnn::training::{train_one, TrainConfig};

const INPUT_LEN: usize = pdfcnn::cli::DEFAULT_INPUT_LEN;

fn main() -> Result<(), Box<dyn Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("pdfcnn-cluster"));
    let spec = SynthCorpusSpec {
        n_benign: 800,
        n_malicious: 300,
        families: default_families(),
        date_range: (NaiveDate::from_ymd_opt(2018, 1, 1).unwrap(), NaiveDate::from_ymd_opt(2018, 12, 31).unwrap()),
        seed: 9,
    };
    let raw = generate_synth_corpus(&spec, &out.join("corpus"))?;
    let (v, t) = cutoffs_for_fractions(&raw, 0.7, 0.15)?;
    let manifest = chronological_split(&raw, v, t, spec.seed)?;
    let train = manifest.load_samples(Some(Split::Train), INPUT_LEN)?;
    let val = manifest.load_samples(Some(Split::Val), INPUT_LEN)?;
    let config = TrainConfig {
        epochs: 5,
        seed: 2,
        ..TrainConfig::new(ArchSpec::desk(ArchitectureId::B, INPUT_LEN))
    };
    let model = train_one(&config, &train, &val)?.checkpoint;

    let malware: Vec<_> = manifest.load_samples(None, INPUT_LEN)?.into_iter().filter(|s| s.label.is_malicious()).collect();
    let features = extract_features(&model, &malware)?;
    let result = hdbscan(features.rows(), 10)?;
    let assign = &result.assignment;
    println!(
        "{} malware, {} clusters, {} noise",
        assign.len(),
        assign.n_clusters(),
        assign.noise_count()
    );

    let labeling = Labeling::from_manifest(&manifest, SYNTH_VENDOR, features.ids());
    let stats = cluster_stats(assign, &labeling, CompletenessScope::Clustered)?;
    for s in &stats {
        println!(
            "cluster {:>2}: size {:>3}, {:<10} homogeneity {:.3}, completeness {:.3}",
            s.cluster,
            s.size,
            s.dominant.as_deref().unwrap_or("-"),
            s.homogeneity,
            s.completeness
        );
    }
    let scores: Vec<f64> = malware.iter().map(|s| model.score(&s.bytes)).collect::<Result<_, _>>()?;
    write_assignment_csv(&out.join("clusters.csv"), features.ids(), assign, &scores, &[labeling])?;
    write_metrics_csv(&out.join("cluster_metrics.csv"), &[(SYNTH_VENDOR.to_string(), stats)])?;

    let proj = project_2d(features.rows())?;
    let points: Vec<_> = proj.coords.iter().zip(assign.labels()).map(|(c, l)| (c[0], c[1], *l)).collect();
    write_svg(&out.join("clusters.svg"), &scatter_svg("ModelB features", "pc1", "pc2", &points))?;
    println!("wrote {}", out.display());
    Ok(())
}
