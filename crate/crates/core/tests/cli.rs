//! End-to-end runs of the `pdfcnn` binary on small corpora.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use pdfcnn::clustering::{cluster_stats, CompletenessScope};
use pdfcnn::corpus::{DatasetManifest, Split};
use pdfcnn::metrics::{apply_threshold, detection_at_fpr};
use pdfcnn::models::{ArchSpec, ArchitectureId, ModelCheckpoint, Network, TrainingMetadata};
use pdfcnn::training::{score_samples, Ensemble};
use tempfile::TempDir;

const INPUT_LEN: usize = 256;

fn pdfcnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdfcnn")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = pdfcnn(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_rows(path: &Path) -> Vec<HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            headers.iter().zip(rec.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect()
        })
        .collect()
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.conf");
    fs::write(
        &path,
        format!("# small desk run\nseed = 5\ninput_len = {INPUT_LEN}\nepochs = 1\nbatch_size = 16\n{extra}"),
    )
    .unwrap();
    path
}

/// A synthesized corpus and a 10-member ensemble trained on it.
struct Trained {
    dir: TempDir,
    config: PathBuf,
}

impl Trained {
    fn corpus(&self) -> PathBuf {
        self.dir.path().join("corpus")
    }
    fn manifest(&self) -> PathBuf {
        self.corpus().join("manifest.csv")
    }
    fn ensemble(&self) -> PathBuf {
        self.dir.path().join("ens")
    }
    fn eval(&self) -> PathBuf {
        self.dir.path().join("eval")
    }
}

fn trained() -> &'static Trained {
    static CELL: OnceLock<Trained> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let config = write_config(dir.path(), "n_benign = 120\nn_malicious = 60\nensemble_size = 10\n");
        let t = Trained { dir, config };
        let cfg = s(&t.config);
        ok(&["synth", "--config", cfg, "--out", s(&t.corpus())]);
        ok(&["train", "--config", cfg, "--manifest", s(&t.manifest()), "--out", s(&t.ensemble())]);
        ok(&[
            "eval",
            "--config",
            cfg,
            "--manifest",
            s(&t.manifest()),
            "--ensemble",
            s(&t.ensemble()),
            "--out",
            s(&t.eval()),
        ]);
        t
    })
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(pdfcnn(&["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(pdfcnn(&[]).status.code(), Some(1));
    assert_eq!(pdfcnn(&["train", "--arch", "Z"]).status.code(), Some(1));
    assert_eq!(pdfcnn(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "epochs = many\n").unwrap();
    assert_eq!(pdfcnn(&["synth", "--config", s(&bad)]).status.code(), Some(1));
}

#[test]
fn synth_is_deterministic_and_writes_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "n_benign = 30\nn_malicious = 12\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["synth", "--config", s(&config), "--out", s(&a)]);
    ok(&["synth", "--config", s(&config), "--out", s(&b)]);

    let manifest = DatasetManifest::read_csv(&a.join("manifest.csv")).unwrap();
    assert_eq!(manifest.len(), 42);
    assert!(manifest.has_splits());
    for e in manifest.entries() {
        assert_eq!(fs::read(a.join(&e.path)).unwrap(), fs::read(b.join(&e.path)).unwrap());
    }
    assert_eq!(fs::read(a.join("manifest.csv")).unwrap(), fs::read(b.join("manifest.csv")).unwrap());

    let out = ok(&["eval", "--config", s(&config), "--manifest", s(&a.join("manifest.csv")), "--validate-corpus"]);
    assert!(out.contains("corpus ok: 42 files"), "{out}");
}

#[test]
fn invalid_synth_spec_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "n_malicious = 0\n");
    let code = pdfcnn(&["synth", "--config", s(&config), "--out", s(&dir.path().join("c"))]).status.code();
    assert!(matches!(code, Some(1) | Some(2)), "{code:?}");
}

#[test]
fn train_writes_one_checkpoint_per_member() {
    let t = trained();
    let ckpts: Vec<_> = fs::read_dir(t.ensemble())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".ckpt"))
        .collect();
    assert_eq!(ckpts.len(), 10);
    assert!(t.ensemble().join("ensemble.json").exists());
    assert!(t.ensemble().join("member_00_log.csv").exists());
    let ens = Ensemble::load(&t.ensemble()).unwrap();
    assert_eq!(ens.len(), 10);
    assert_eq!(ens.spec().input_len, INPUT_LEN);
}

#[test]
fn eval_report_matches_library_calls() {
    let t = trained();
    let rows = read_rows(&t.eval().join("report.csv"));
    for set in ["train", "val", "test"] {
        assert_eq!(rows.iter().filter(|r| r["set"] == set).count(), 3, "{set}");
    }
    for name in ["scores.csv", "thresholds.csv", "roc_val.csv", "roc_test.csv", "roc.svg"] {
        assert!(t.eval().join(name).exists(), "{name}");
    }

    let manifest = DatasetManifest::read_csv(&t.manifest()).unwrap();
    let scorer = Ensemble::load(&t.ensemble()).unwrap().scorer().unwrap();
    let scored = |split| score_samples(&scorer, &manifest.load_samples(Some(split), INPUT_LEN).unwrap()).unwrap();
    let (train, val, test) = (scored(Split::Train), scored(Split::Val), scored(Split::Test));
    for budget in [0.01, 0.005, 0.002] {
        let metric = format!("detection_at_fpr_{budget}");
        let value = |set: &str| -> f64 {
            rows.iter().find(|r| r["set"] == set && r["metric"] == metric).unwrap()["value"].parse().unwrap()
        };
        let threshold = detection_at_fpr(&val, budget).unwrap().threshold;
        assert_eq!(value("train"), detection_at_fpr(&train, budget).unwrap().detection);
        assert_eq!(value("val"), detection_at_fpr(&val, budget).unwrap().detection);
        assert_eq!(value("test"), apply_threshold(&test, threshold).detection);
    }
}

#[test]
fn scan_agrees_with_eval_scores() {
    let t = trained();
    let rows = read_rows(&t.eval().join("scores.csv"));
    let picks: Vec<&HashMap<String, String>> = rows.iter().step_by(37).take(4).collect();
    let paths: Vec<PathBuf> = picks.iter().map(|r| t.corpus().join(&r["sample_id"])).collect();
    let ens = t.ensemble();
    let mut args = vec!["scan", "--ensemble", s(&ens)];
    args.extend(paths.iter().map(|p| s(p)));
    let out = ok(&args);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), picks.len());
    for (line, row) in lines.iter().zip(&picks) {
        let fields: Vec<&str> = line.rsplitn(3, ',').collect();
        assert_eq!(fields[1], row["score"], "{line}");
        assert!(fields[0].ends_with("@0.5"), "{line}");
    }
}

#[test]
fn scan_handles_empty_and_duplicate_files() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.pdf");
    fs::write(&empty, b"").unwrap();
    let original = t.corpus().join("mal_00000.pdf");
    let copy = dir.path().join("copy.pdf");
    fs::copy(&original, &copy).unwrap();

    let out = ok(&["scan", "--ensemble", s(&t.ensemble()), "--threshold", "0.9", s(&empty), s(&original), s(&copy)]);
    let scores: Vec<f64> = out.lines().map(|l| l.rsplitn(3, ',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(scores.len(), 3);
    assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)));
    assert_eq!(scores[1], scores[2]);

    let missing = pdfcnn(&["scan", "--ensemble", s(&t.ensemble()), s(&dir.path().join("nope.pdf"))]);
    assert_eq!(missing.status.code(), Some(4));
}

#[test]
fn cluster_rejects_non_b_checkpoints() {
    let t = trained();
    let out = pdfcnn(&[
        "cluster",
        "--config",
        s(&t.config),
        "--manifest",
        s(&t.manifest()),
        "--checkpoint",
        s(&t.ensemble().join("member_00.ckpt")),
        "--out",
        s(&t.dir.path().join("clusters")),
    ]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn cluster_finds_two_blobs_in_a_feature_file() {
    let dir = tempfile::tempdir().unwrap();
    let features = dir.path().join("features.csv");
    let mut text = String::from("sample_id,f0,f1,f2\n");
    for i in 0..40 {
        let (cx, name) = if i < 20 { (0.0, "a") } else { (10.0, "b") };
        let j = (i % 20) as f64;
        text.push_str(&format!("{name}{i},{},{},{}\n", cx + 0.05 * j, cx + 0.03 * j, 0.01 * (j % 3.0)));
    }
    fs::write(&features, text).unwrap();
    let out = dir.path().join("out");
    ok(&["cluster", "--features", s(&features), "--min-cluster-size", "5", "--out", s(&out)]);

    let rows = read_rows(&out.join("clusters.csv"));
    assert_eq!(rows.len(), 40);
    let cluster_of = |i: usize| rows[i]["cluster"].parse::<i64>().unwrap();
    assert!((0..20).all(|i| cluster_of(i) == cluster_of(0)));
    assert!((20..40).all(|i| cluster_of(i) == cluster_of(20)));
    assert_ne!(cluster_of(0), cluster_of(20));
    assert!(cluster_of(0) >= 0 && cluster_of(20) >= 0);
    assert!(out.join("projection.csv").exists());
    assert!(out.join("clusters.svg").exists());
}

#[test]
fn cluster_on_model_b_features_scores_families() {
    let t = trained();
    let ens = t.dir.path().join("ens_b");
    ok(&[
        "train",
        "--config",
        s(&t.config),
        "--manifest",
        s(&t.manifest()),
        "--arch",
        "B",
        "--ensemble-size",
        "1",
        "--out",
        s(&ens),
    ]);
    let out = t.dir.path().join("clusters_b");
    ok(&[
        "cluster",
        "--config",
        s(&t.config),
        "--manifest",
        s(&t.manifest()),
        "--checkpoint",
        s(&ens),
        "--min-cluster-size",
        "5",
        "--out",
        s(&out),
    ]);
    let metrics = read_rows(&out.join("cluster_metrics.csv"));
    assert!(!metrics.is_empty());
    for r in &metrics {
        let h: f64 = r["homogeneity"].parse().unwrap();
        assert!(h > 0.0 && h <= 1.0, "{r:?}");
    }

    // Reassemble the per-cluster homogeneity from clusters.csv.
    let rows = read_rows(&out.join("clusters.csv"));
    let assign = pdfcnn::clustering::ClusterAssignment::from_labels(
        rows.iter()
            .map(|r| r["cluster"].parse::<i64>().unwrap())
            .map(|c| usize::try_from(c).ok())
            .collect(),
    );
    let labeling = pdfcnn::clustering::Labeling::new(
        "synth",
        rows.iter().map(|r| Some(r["family"].clone()).filter(|f| !f.is_empty() && f != "undetected")).collect(),
    );
    let stats = cluster_stats(&assign, &labeling, CompletenessScope::Clustered).unwrap();
    for st in stats {
        let r = metrics.iter().find(|r| r["cluster"] == st.cluster.to_string()).unwrap();
        let h: f64 = r["homogeneity"].parse().unwrap();
        assert!((h - st.homogeneity).abs() < 1e-12);
    }
}

/// ModelA with hand-set weights: the score is high exactly when the input
/// contains byte 0xFF.
fn marker_detector(path: &Path) {
    let mut net = Network::build(ArchSpec::desk(ArchitectureId::A, INPUT_LEN), 0).unwrap();
    let mut params = net.parameters_mut();
    let n = params.len();
    for block in params.iter_mut() {
        block.iter_mut().for_each(|w| *w = 0.0);
    }
    params[0][0xFF] = 1.0;
    let row = params[1].len() / 128;
    params[1][..row].iter_mut().for_each(|w| *w = 1.0);
    params[n - 2][0] = 20.0;
    params[n - 1][0] = -10.0;
    ModelCheckpoint::from_network(&net, TrainingMetadata::untrained(0)).save(path).unwrap();
}

#[test]
fn perfectly_separable_corpus_reports_full_detection() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir(&corpus).unwrap();
    let mut manifest = String::from("path,label,first_seen\n");
    for i in 0..60 {
        let name = format!("b{i}.pdf");
        fs::write(corpus.join(&name), format!("%PDF-1.4 benign {i}")).unwrap();
        manifest.push_str(&format!("{name},benign,\n"));
    }
    for i in 0..30 {
        let name = format!("m{i}.pdf");
        let mut bytes = format!("%PDF-1.4 malicious {i} ").into_bytes();
        bytes.push(0xFF);
        fs::write(corpus.join(&name), bytes).unwrap();
        manifest.push_str(&format!("{name},malicious,2018-{:02}-10\n", 1 + i % 12));
    }
    fs::write(corpus.join("manifest.csv"), manifest).unwrap();
    let ckpt = dir.path().join("marker.ckpt");
    marker_detector(&ckpt);

    let out = dir.path().join("eval");
    let config = write_config(dir.path(), "");
    ok(&[
        "eval",
        "--config",
        s(&config),
        "--manifest",
        s(&corpus.join("manifest.csv")),
        "--ensemble",
        s(&ckpt),
        "--fpr",
        "0.01,0.05",
        "--out",
        s(&out),
    ]);
    let rows = read_rows(&out.join("report.csv"));
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r["value"].parse::<f64>().unwrap(), 1.0, "{r:?}");
    }
    for r in read_rows(&out.join("thresholds.csv")) {
        assert_eq!(r["test_fpr"].parse::<f64>().unwrap(), 0.0);
    }
}

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    out
}

/// Directory contents by file name. Training logs keep every column except
/// the last, which is wall-clock time.
fn names_and_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    snapshot(dir)
        .into_iter()
        .map(|(p, b)| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            if !name.ends_with("_log.csv") {
                return (name, b);
            }
            let text = String::from_utf8(b).unwrap();
            let kept: Vec<&str> = text.lines().map(|l| l.rsplit_once(',').unwrap().0).collect();
            (name, kept.join("\n").into_bytes())
        })
        .collect()
}

#[test]
fn reruns_are_byte_identical_and_leave_inputs_alone() {
    let t = trained();
    let before = snapshot(&t.corpus());
    let cfg = s(&t.config);
    let manifest = t.manifest();
    let train = |out: &Path| ok(&["train", "--config", cfg, "--manifest", s(&manifest), "--ensemble-size", "2", "--out", s(out)]);
    let (first, second) = (t.dir.path().join("rerun_a"), t.dir.path().join("rerun_b"));
    train(&first);
    train(&second);
    assert_eq!(names_and_bytes(&first), names_and_bytes(&second));

    let again = t.dir.path().join("eval_again");
    ok(&["eval", "--config", cfg, "--manifest", s(&manifest), "--ensemble", s(&t.ensemble()), "--out", s(&again)]);
    assert_eq!(names_and_bytes(&t.eval()), names_and_bytes(&again));
    assert_eq!(before, snapshot(&t.corpus()));
}
