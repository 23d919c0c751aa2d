//! The `pdfcnn` command line: `synth`, `train`, `eval`, `scan` and `cluster`.
//!
//! Exit codes: 0 success, 1 usage, 2 corpus spec, 3 training, 4 evaluation,
//! 5 clustering.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_cluster, cmd_eval, cmd_scan, cmd_synth, cmd_train, prepare_manifest, ScanLine};
pub use config::{parse_budgets, ConfigError, RunConfig, DEFAULT_BUDGETS, DEFAULT_INPUT_LEN};

use crate::models::ArchitectureId;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SPEC: i32 = 2;
pub const EXIT_TRAIN: i32 = 3;
pub const EXIT_EVAL: i32 = 4;
pub const EXIT_CLUSTER: i32 = 5;

/// A failed command with its process exit code.
#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl std::fmt::Display) -> Self {
        CliError {
            code,
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pdfcnn", version, about = "Byte-level CNN malware detection for PDF files")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic PDF corpus and its manifest.
    Synth(SynthArgs),
    /// Train an ensemble on the train split, early-stopping on val.
    Train(TrainArgs),
    /// Score every split, calibrate thresholds on val and report.
    Eval(EvalArgs),
    /// Score individual files.
    Scan(ScanArgs),
    /// Cluster malware by pooled ModelB features.
    Cluster(ClusterArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Flat key = value run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub n_benign: Option<usize>,
    #[arg(long)]
    pub n_malicious: Option<usize>,
    /// Add a family that only appears after the validation period.
    #[arg(long)]
    pub drift: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_parser = parse_arch)]
    pub arch: Option<ArchitectureId>,
    #[arg(long)]
    pub ensemble_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Ensemble directory, descriptor file or single checkpoint.
    #[arg(long, required_unless_present = "validate_corpus")]
    pub ensemble: Option<PathBuf>,
    /// Comma-separated FPR budgets.
    #[arg(long)]
    pub fpr: Option<String>,
    /// Check every manifest file for PDF well-formedness.
    #[arg(long)]
    pub validate_corpus: bool,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub ensemble: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// ModelB checkpoint (or ensemble; its first member is used).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Precomputed `sample_id,f0,f1,...` features instead of a checkpoint.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub min_cluster_size: Option<usize>,
    /// Vendor whose labels to score against; repeatable.
    #[arg(long = "vendor")]
    pub vendors: Vec<String>,
    /// Count noise-assigned family members in completeness denominators.
    #[arg(long)]
    pub completeness_with_noise: bool,
}

fn parse_arch(s: &str) -> Result<ArchitectureId, String> {
    s.parse().map_err(|_| format!("unknown model {s:?}, expected A, B or C"))
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::from_file(p).map_err(|e| CliError::new(EXIT_USAGE, e))?,
        None => RunConfig::default(),
    };
    if let Some(m) = &common.manifest {
        cfg.manifest = Some(m.clone());
    }
    if let Some(o) = &common.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn validated(cfg: RunConfig) -> Result<RunConfig, CliError> {
    cfg.validate().map_err(|e| CliError::new(EXIT_USAGE, e))?;
    Ok(cfg)
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth(a) => {
            let mut cfg = load_config(&a.common)?;
            if let Some(n) = a.n_benign {
                cfg.n_benign = n;
            }
            if let Some(n) = a.n_malicious {
                cfg.n_malicious = n;
            }
            cfg.drift_family |= a.drift;
            cmd_synth(&validated(cfg)?)
        }
        Command::Train(a) => {
            let mut cfg = load_config(&a.common)?;
            if let Some(arch) = a.arch {
                cfg.arch = arch;
            }
            if let Some(n) = a.ensemble_size {
                cfg.ensemble_size = n;
            }
            if let Some(e) = a.epochs {
                cfg.epochs = e;
            }
            cmd_train(&validated(cfg)?)
        }
        Command::Eval(a) => {
            let mut cfg = load_config(&a.common)?;
            if let Some(f) = &a.fpr {
                cfg.budgets = parse_budgets(f).map_err(|e| CliError::new(EXIT_USAGE, e))?;
            }
            cmd_eval(&validated(cfg)?, a.ensemble.as_deref(), a.validate_corpus)
        }
        Command::Scan(a) => {
            let lines = cmd_scan(&a.ensemble, &a.paths, a.threshold)?;
            for l in lines {
                println!("{l}");
            }
            Ok(())
        }
        Command::Cluster(a) => {
            let mut cfg = load_config(&a.common)?;
            if let Some(m) = a.min_cluster_size {
                cfg.min_cluster_size = m;
            }
            if !a.vendors.is_empty() {
                cfg.vendors = a.vendors.clone();
            }
            if a.completeness_with_noise {
                cfg.completeness = crate::clustering::CompletenessScope::AllSamples;
            }
            cmd_cluster(&validated(cfg)?, a.checkpoint.as_deref(), a.features.as_deref())
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
