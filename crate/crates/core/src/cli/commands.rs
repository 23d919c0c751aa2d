use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::Duration;

use super::{CliError, RunConfig, EXIT_CLUSTER, EXIT_EVAL, EXIT_SPEC, EXIT_TRAIN};
use crate::clustering::{
    cluster_stats, extract_features, hdbscan, project_2d, read_feature_csv, write_assignment_csv,
    write_metrics_csv, write_projection_csv, FeatureMatrix, Labeling,
};
use crate::corpus::{
    check_pdf_structure, chronological_split, cutoffs_for_fractions, default_families, drift_family,
    generate_synth_corpus, ByteSequence, DatasetManifest, Label, LabeledSample, Split, SynthCorpusSpec,
};
use crate::metrics::{apply_threshold, detection_at_fpr, roc, write_report_csv, ReportRow, ScoredSample};
use crate::models::{ArchitectureId, ModelCheckpoint};
use crate::plot::{line_chart_svg, scatter_svg, write_svg, Bounds, Series};
use crate::seed::{self, Component};
use crate::training::{score_samples, train_ensemble, write_epoch_log, Ensemble};

fn io(code: i32, path: &Path, e: impl fmt::Display) -> CliError {
    CliError::new(code, format!("{}: {e}", path.display()))
}

fn create_out(code: i32, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io(code, dir, e))
}

/// Reads the configured manifest and makes sure every entry has a split,
/// applying the configured chronological cutoffs when it does not.
pub fn prepare_manifest(cfg: &RunConfig) -> Result<DatasetManifest, String> {
    let path = cfg.manifest.as_ref().ok_or("no manifest given (use --manifest or the config key)")?;
    let manifest = DatasetManifest::read_csv(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if manifest.has_splits() {
        return Ok(manifest);
    }
    split_manifest(&manifest, cfg)
}

fn split_manifest(manifest: &DatasetManifest, cfg: &RunConfig) -> Result<DatasetManifest, String> {
    let (val_cutoff, test_cutoff) = match cfg.cutoffs {
        Some(c) => c,
        None => cutoffs_for_fractions(manifest, cfg.train_fraction, cfg.val_fraction).map_err(|e| e.to_string())?,
    };
    chronological_split(manifest, val_cutoff, test_cutoff, seed::derive(cfg.seed, Component::Split, 0))
        .map_err(|e| e.to_string())
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<(), CliError> {
    let mut families = default_families();
    if cfg.drift_family {
        // The late family takes a tenth of the malware and is dated after
        // the train and validation share of the date range.
        families.iter_mut().for_each(|f| f.prevalence *= 0.9);
        let (start, end) = cfg.date_range;
        let late = start + Duration::days(((end - start).num_days() as f64 * (cfg.train_fraction + cfg.val_fraction)).ceil() as i64);
        let mut drift = drift_family();
        drift.prevalence = 0.1;
        drift.window = Some((late.min(end), end));
        families.push(drift);
    }
    let spec = SynthCorpusSpec {
        n_benign: cfg.n_benign,
        n_malicious: cfg.n_malicious,
        families,
        date_range: cfg.date_range,
        seed: seed::derive(cfg.seed, Component::Synth, 0),
    };
    let manifest = generate_synth_corpus(&spec, &cfg.out_dir).map_err(|e| CliError::new(EXIT_SPEC, e))?;
    let split = split_manifest(&manifest, cfg).map_err(|e| CliError::new(EXIT_SPEC, e))?;
    let path = cfg.out_dir.join("manifest.csv");
    split.write_csv(&path).map_err(|e| CliError::new(EXIT_SPEC, e))?;
    let count = |s| split.split(s).filter(|e| e.label == Label::Malicious).count();
    println!(
        "wrote {} files to {} (malicious train/val/test: {}/{}/{})",
        split.len(),
        cfg.out_dir.display(),
        count(Split::Train),
        count(Split::Val),
        count(Split::Test)
    );
    Ok(())
}

pub fn cmd_train(cfg: &RunConfig) -> Result<(), CliError> {
    let fail = |e: &dyn fmt::Display| CliError::new(EXIT_TRAIN, e);
    let manifest = prepare_manifest(cfg).map_err(|e| fail(&e))?;
    let load = |split| manifest.load_samples(Some(split), cfg.input_len).map_err(|e| fail(&e));
    let (train, val) = (load(Split::Train)?, load(Split::Val)?);
    let (ensemble, logs) = train_ensemble(&cfg.train_config(), cfg.ensemble_size, &train, &val).map_err(|e| fail(&e))?;
    create_out(EXIT_TRAIN, &cfg.out_dir)?;
    let descriptor = ensemble.save(&cfg.out_dir).map_err(|e| fail(&e))?;
    for (i, (log, member)) in logs.iter().zip(ensemble.members()).enumerate() {
        write_epoch_log(&cfg.out_dir.join(format!("member_{i:02}_log.csv")), log).map_err(|e| fail(&e))?;
        println!(
            "member {i}: selected epoch {} of {}, val detection {:.4} at FPR {}",
            member.metadata.selected_epoch,
            member.metadata.epochs_run,
            member.metadata.val_detection_at_fpr.unwrap_or(f64::NAN),
            member.metadata.target_fpr
        );
    }
    println!("ensemble of {} written to {}", ensemble.len(), descriptor.display());
    Ok(())
}

fn validate_corpus(manifest: &DatasetManifest) -> Result<(), CliError> {
    let mut bad = Vec::new();
    for e in manifest.entries() {
        let path = manifest.resolve(e);
        match fs::read(&path) {
            Ok(bytes) => {
                if let Err(why) = check_pdf_structure(&bytes) {
                    bad.push(format!("{}: {why}", path.display()));
                }
            }
            Err(err) => bad.push(format!("{}: {err}", path.display())),
        }
    }
    if bad.is_empty() {
        println!("corpus ok: {} files", manifest.len());
        Ok(())
    } else {
        for b in &bad {
            eprintln!("invalid: {b}");
        }
        Err(CliError::new(EXIT_EVAL, format!("{} of {} files failed validation", bad.len(), manifest.len())))
    }
}

fn budget_metric(b: f64) -> String {
    format!("detection_at_fpr_{b}")
}

pub fn cmd_eval(cfg: &RunConfig, ensemble: Option<&Path>, check_corpus: bool) -> Result<(), CliError> {
    let fail = |e: &dyn fmt::Display| CliError::new(EXIT_EVAL, e);
    let manifest = prepare_manifest(cfg).map_err(|e| fail(&e))?;
    if check_corpus {
        validate_corpus(&manifest)?;
    }
    let Some(ensemble) = ensemble else { return Ok(()) };
    let ens = Ensemble::load(ensemble).map_err(|e| fail(&e))?;
    let scorer = ens.scorer().map_err(|e| fail(&e))?;
    create_out(EXIT_EVAL, &cfg.out_dir)?;

    let mut scored: Vec<(Split, Vec<ScoredSample>)> = Vec::new();
    for split in Split::ALL {
        let samples = manifest.load_samples(Some(split), scorer.input_len()).map_err(|e| fail(&e))?;
        scored.push((split, score_samples(&scorer, &samples).map_err(|e| fail(&e))?));
    }
    let scores_path = cfg.out_dir.join("scores.csv");
    let mut w = csv::Writer::from_path(&scores_path).map_err(|e| io(EXIT_EVAL, &scores_path, e))?;
    w.write_record(["sample_id", "set", "label", "score"]).map_err(|e| io(EXIT_EVAL, &scores_path, e))?;
    for (split, set) in &scored {
        for s in set {
            w.write_record([s.id.clone(), split.to_string(), s.label.to_string(), format!("{}", s.score)])
                .map_err(|e| io(EXIT_EVAL, &scores_path, e))?;
        }
    }
    w.flush().map_err(|e| io(EXIT_EVAL, &scores_path, e))?;

    let val = &scored[1].1;
    let mut thresholds = Vec::new();
    for &b in &cfg.budgets {
        let op = detection_at_fpr(val, b).map_err(|e| fail(&format!("calibrating on val: {e}")))?;
        thresholds.push((b, op.threshold));
    }

    // Train and val report their own best detection within each budget; test
    // gets the frozen validation threshold.
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for (split, set) in &scored {
        for &(b, t) in &thresholds {
            let value = match split {
                Split::Test => apply_threshold(set, t).detection,
                _ => detection_at_fpr(set, b).map_err(|e| fail(&format!("{split}: {e}")))?.detection,
            };
            rows.push(ReportRow::new(split.to_string(), budget_metric(b), value));
        }
        match roc(set) {
            Ok(curve) => {
                curve.write_csv(&cfg.out_dir.join(format!("roc_{split}.csv"))).map_err(|e| fail(&e))?;
                println!("{split}: AUC {:.6}", curve.auc());
                series.push(Series {
                    name: format!("{split} (AUC {:.4})", curve.auc()),
                    points: curve.points.iter().map(|p| (p.fpr, p.detection)).collect(),
                });
            }
            Err(e) => eprintln!("warning: no ROC for {split}: {e}"),
        }
    }
    write_report_csv(&cfg.out_dir.join("report.csv"), &rows).map_err(|e| fail(&e))?;

    let tpath = cfg.out_dir.join("thresholds.csv");
    let mut w = csv::Writer::from_path(&tpath).map_err(|e| io(EXIT_EVAL, &tpath, e))?;
    w.write_record(["budget", "threshold", "test_detection", "test_fpr"])
        .map_err(|e| io(EXIT_EVAL, &tpath, e))?;
    for &(b, t) in &thresholds {
        let op = apply_threshold(&scored[2].1, t);
        w.write_record([b.to_string(), t.to_string(), op.detection.to_string(), op.fpr.to_string()])
            .map_err(|e| io(EXIT_EVAL, &tpath, e))?;
        println!("budget {b}: threshold {t}, test detection {:.4}, test FPR {:.4}", op.detection, op.fpr);
    }
    w.flush().map_err(|e| io(EXIT_EVAL, &tpath, e))?;

    let bounds = Bounds {
        x: (0.0, 1.0),
        y: (0.0, 1.0),
    };
    let svg = line_chart_svg(&format!("ROC, model {} x{}", ens.arch(), ens.len()), "false positive rate", "detection rate", &series, Some(bounds));
    let plot = cfg.out_dir.join("roc.svg");
    write_svg(&plot, &svg).map_err(|e| io(EXIT_EVAL, &plot, e))?;
    Ok(())
}

/// One `path,score,verdict@threshold` output line.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanLine {
    pub path: PathBuf,
    pub score: f64,
    pub threshold: f64,
}

impl ScanLine {
    pub fn verdict(&self) -> Label {
        if self.score >= self.threshold {
            Label::Malicious
        } else {
            Label::Benign
        }
    }
}

impl fmt::Display for ScanLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}@{}", self.path.display(), self.score, self.verdict(), self.threshold)
    }
}

pub fn cmd_scan(ensemble: &Path, paths: &[PathBuf], threshold: f64) -> Result<Vec<ScanLine>, CliError> {
    let fail = |e: &dyn fmt::Display| CliError::new(EXIT_EVAL, e);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CliError::new(super::EXIT_USAGE, format!("threshold {threshold} outside [0, 1]")));
    }
    let ens = Ensemble::load(ensemble).map_err(|e| fail(&e))?;
    let scorer = ens.scorer().map_err(|e| fail(&e))?;
    paths
        .iter()
        .map(|p| {
            let seq = ByteSequence::load(p, scorer.input_len()).map_err(|e| fail(&e))?;
            Ok(ScanLine {
                path: p.clone(),
                score: scorer.score(&seq).map_err(|e| fail(&e))?,
                threshold,
            })
        })
        .collect()
}

fn load_cluster_checkpoint(path: &Path) -> Result<ModelCheckpoint, CliError> {
    let fail = |e: &dyn fmt::Display| CliError::new(EXIT_CLUSTER, e);
    let ens = Ensemble::load(path).map_err(|e| fail(&e))?;
    if ens.arch() != ArchitectureId::B {
        return Err(CliError::new(
            EXIT_CLUSTER,
            format!("clustering needs a ModelB checkpoint, {} holds model {}", path.display(), ens.arch()),
        ));
    }
    Ok(ens.members()[0].clone())
}

pub fn cmd_cluster(cfg: &RunConfig, checkpoint: Option<&Path>, features: Option<&Path>) -> Result<(), CliError> {
    let fail = |e: &dyn fmt::Display| CliError::new(EXIT_CLUSTER, e);
    let manifest = match (&cfg.manifest, features) {
        (None, Some(_)) => None,
        _ => Some(prepare_manifest(cfg).map_err(|e| fail(&e))?),
    };
    let (matrix, scores): (FeatureMatrix, Vec<f64>) = match (features, checkpoint) {
        (Some(f), _) => {
            let m = read_feature_csv(f).map_err(|e| fail(&e))?;
            let n = m.len();
            (m, vec![f64::NAN; n])
        }
        (None, Some(c)) => {
            let ckpt = load_cluster_checkpoint(c)?;
            let manifest = manifest.as_ref().expect("manifest loaded above");
            let malicious: Vec<LabeledSample> = manifest
                .load_samples(None, ckpt.spec.input_len)
                .map_err(|e| fail(&e))?
                .into_iter()
                .filter(|s| s.label.is_malicious())
                .collect();
            let m = extract_features(&ckpt, &malicious).map_err(|e| fail(&e))?;
            let scorer = crate::training::EnsembleScorer::from_checkpoints(std::slice::from_ref(&ckpt)).map_err(|e| fail(&e))?;
            let scores = score_samples(&scorer, &malicious).map_err(|e| fail(&e))?;
            (m, scores.into_iter().map(|s| s.score).collect())
        }
        (None, None) => return Err(CliError::new(super::EXIT_USAGE, "cluster needs --checkpoint or --features")),
    };

    let result = hdbscan(matrix.rows(), cfg.min_cluster_size).map_err(|e| fail(&e))?;
    let assign = result.assignment;
    let ids = matrix.ids().to_vec();
    let labelings: Vec<Labeling> = match &manifest {
        Some(m) => {
            let present = m.vendors();
            let mut vendors: Vec<String> = cfg.vendors.iter().filter(|v| present.contains(v)).cloned().collect();
            if vendors.is_empty() {
                vendors = present;
            }
            vendors.iter().map(|v| Labeling::from_manifest(m, v, &ids)).collect()
        }
        None => Vec::new(),
    };

    create_out(EXIT_CLUSTER, &cfg.out_dir)?;
    write_assignment_csv(&cfg.out_dir.join("clusters.csv"), &ids, &assign, &scores, &labelings).map_err(|e| fail(&e))?;
    let mut per_vendor = Vec::new();
    for l in &labelings {
        let stats = cluster_stats(&assign, l, cfg.completeness).map_err(|e| fail(&e))?;
        let defined: Vec<f64> = stats.iter().map(|s| s.homogeneity).filter(|h| !h.is_nan()).collect();
        if !defined.is_empty() {
            println!(
                "vendor {}: mean homogeneity {:.4} over {} clusters",
                l.vendor,
                defined.iter().sum::<f64>() / defined.len() as f64,
                defined.len()
            );
        }
        per_vendor.push((l.vendor.clone(), stats));
    }
    write_metrics_csv(&cfg.out_dir.join("cluster_metrics.csv"), &per_vendor).map_err(|e| fail(&e))?;
    println!(
        "{} samples, {} clusters, {} noise",
        assign.len(),
        assign.n_clusters(),
        assign.noise_count()
    );

    if matrix.len() >= 2 {
        let proj = project_2d(matrix.rows()).map_err(|e| fail(&e))?;
        write_projection_csv(&cfg.out_dir.join("projection.csv"), &ids, &proj, &assign).map_err(|e| fail(&e))?;
        let points: Vec<(f64, f64, Option<usize>)> =
            proj.coords.iter().zip(assign.labels()).map(|(c, l)| (c[0], c[1], *l)).collect();
        let svg = scatter_svg("Clusters on the first two principal components", "PC1", "PC2", &points);
        let plot = cfg.out_dir.join("clusters.svg");
        write_svg(&plot, &svg).map_err(|e| io(EXIT_CLUSTER, &plot, e))?;
    }
    Ok(())
}
