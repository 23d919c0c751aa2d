//! Flat `key = value` run configuration. Blank lines and `#` comments are
//! ignored; relative paths resolve against the config file's directory.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::clustering::{CompletenessScope, DEFAULT_MIN_CLUSTER_SIZE};
use crate::corpus::SYNTH_VENDOR;
use crate::models::{ArchSpec, ArchitectureId};
use crate::training::TrainConfig;

/// Input length used by the CLI unless a config overrides it.
pub const DEFAULT_INPUT_LEN: usize = 4096;

/// FPR budgets reported by `eval` by default.
pub const DEFAULT_BUDGETS: [f64; 3] = [0.01, 0.005, 0.002];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub arch: ArchitectureId,
    pub input_len: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// FPR budget driving early stopping.
    pub target_fpr: f64,
    pub ensemble_size: usize,
    pub budgets: Vec<f64>,
    /// Explicit chronological cutoffs; fractions are used when absent.
    pub cutoffs: Option<(NaiveDate, NaiveDate)>,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub min_cluster_size: usize,
    /// Vendors whose labels the cluster report uses; empty means all.
    pub vendors: Vec<String>,
    pub completeness: CompletenessScope,
    pub n_benign: usize,
    pub n_malicious: usize,
    pub date_range: (NaiveDate, NaiveDate),
    /// Adds the late-only family to synthesized corpora.
    pub drift_family: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let d = |y, m, day| NaiveDate::from_ymd_opt(y, m, day).expect("valid date");
        RunConfig {
            manifest: None,
            out_dir: PathBuf::from("out"),
            seed: 0,
            arch: ArchitectureId::A,
            input_len: DEFAULT_INPUT_LEN,
            epochs: 5,
            batch_size: 32,
            learning_rate: 1e-3,
            target_fpr: 0.01,
            ensemble_size: 10,
            budgets: DEFAULT_BUDGETS.to_vec(),
            cutoffs: None,
            train_fraction: 0.7,
            val_fraction: 0.15,
            min_cluster_size: DEFAULT_MIN_CLUSTER_SIZE,
            vendors: vec![SYNTH_VENDOR.to_string()],
            completeness: CompletenessScope::Clustered,
            n_benign: 2000,
            n_malicious: 500,
            date_range: (d(2018, 1, 1), d(2018, 12, 31)),
            drift_family: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError(format!("{key}: cannot parse {v:?}")))
}

fn parse_date(key: &str, v: &str) -> Result<NaiveDate, ConfigError> {
    NaiveDate::parse_from_str(v, "%Y-%m-%d").map_err(|_| ConfigError(format!("{key}: expected YYYY-MM-DD, got {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError(format!("{key}: expected true/false, got {v:?}"))),
    }
}

/// Comma-separated FPR budgets.
pub fn parse_budgets(v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse::<f64>("fpr", s))
        .collect()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        RunConfig::parse_str(&text, base)
    }

    pub fn parse_str(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut c = RunConfig::default();
        let (mut val_cutoff, mut test_cutoff) = (None, None);
        let mut date_start = c.date_range.0;
        let mut date_end = c.date_range.1;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key = value", n + 1)))?;
            let (key, v) = (key.trim(), value.trim());
            match key {
                "manifest" => c.manifest = Some(base.join(v)),
                "out" | "out_dir" => c.out_dir = base.join(v),
                "seed" => c.seed = parse(key, v)?,
                "arch" => c.arch = v.parse().map_err(|_| ConfigError(format!("arch: unknown model {v:?}")))?,
                "input_len" => c.input_len = parse(key, v)?,
                "epochs" => c.epochs = parse(key, v)?,
                "batch_size" => c.batch_size = parse(key, v)?,
                "learning_rate" => c.learning_rate = parse(key, v)?,
                "target_fpr" => c.target_fpr = parse(key, v)?,
                "ensemble_size" => c.ensemble_size = parse(key, v)?,
                "fpr" | "budgets" => c.budgets = parse_budgets(v)?,
                "val_cutoff" => val_cutoff = Some(parse_date(key, v)?),
                "test_cutoff" => test_cutoff = Some(parse_date(key, v)?),
                "train_fraction" => c.train_fraction = parse(key, v)?,
                "val_fraction" => c.val_fraction = parse(key, v)?,
                "min_cluster_size" => c.min_cluster_size = parse(key, v)?,
                "vendors" => c.vendors = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
                "completeness" => {
                    c.completeness = match v {
                        "clustered" => CompletenessScope::Clustered,
                        "all" => CompletenessScope::AllSamples,
                        _ => return Err(ConfigError(format!("completeness: expected clustered or all, got {v:?}"))),
                    }
                }
                "n_benign" => c.n_benign = parse(key, v)?,
                "n_malicious" => c.n_malicious = parse(key, v)?,
                "date_start" => date_start = parse_date(key, v)?,
                "date_end" => date_end = parse_date(key, v)?,
                "drift_family" => c.drift_family = parse_bool(key, v)?,
                other => return Err(ConfigError(format!("line {}: unknown key {other:?}", n + 1))),
            }
        }
        c.date_range = (date_start, date_end);
        c.cutoffs = match (val_cutoff, test_cutoff) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(ConfigError("val_cutoff and test_cutoff must be given together".into())),
        };
        Ok(c)
    }

    /// Checks ranges and that referenced paths exist.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError(m));
        if let Some(m) = &self.manifest {
            if !m.is_file() {
                return bad(format!("manifest {} does not exist", m.display()));
            }
        }
        if self.budgets.is_empty() {
            return bad("at least one FPR budget is required".into());
        }
        if let Some(b) = self.budgets.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
            return bad(format!("FPR budget {b} outside (0, 1)"));
        }
        if !(self.target_fpr > 0.0 && self.target_fpr < 1.0) {
            return bad(format!("target_fpr {} outside (0, 1)", self.target_fpr));
        }
        if self.ensemble_size == 0 {
            return bad("ensemble_size must be at least 1".into());
        }
        if self.min_cluster_size < 2 {
            return bad("min_cluster_size must be at least 2".into());
        }
        if let Some((a, b)) = self.cutoffs {
            if a >= b {
                return bad(format!("val_cutoff {a} must precede test_cutoff {b}"));
            }
        } else if !(self.train_fraction > 0.0 && self.val_fraction > 0.0 && self.train_fraction + self.val_fraction < 1.0) {
            return bad(format!("split fractions {}/{} leave no test share", self.train_fraction, self.val_fraction));
        }
        self.train_config().validate().map_err(|e| ConfigError(e.to_string()))
    }

    pub fn arch_spec(&self) -> ArchSpec {
        ArchSpec::desk(self.arch, self.input_len)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed: self.seed,
            target_fpr: self.target_fpr,
            ..TrainConfig::new(self.arch_spec())
        }
    }
}
