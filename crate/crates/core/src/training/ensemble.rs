use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train_one, EpochRecord, TrainConfig, TrainError};
use crate::corpus::{ByteSequence, LabeledSample};
use crate::metrics::ScoredSample;
use crate::models::{ArchSpec, ArchitectureId, FusedEmbedConv, ModelCheckpoint, ModelError, Network};

/// File name of the ensemble descriptor written by [`Ensemble::save`].
pub const ENSEMBLE_DESCRIPTOR: &str = "ensemble.json";

/// Independently trained members of one architecture; the ensemble score is
/// the mean of member scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<ModelCheckpoint>,
}

#[derive(Serialize, Deserialize)]
struct Descriptor {
    arch: String,
    input_len: usize,
    members: Vec<String>,
}

impl Ensemble {
    pub fn new(members: Vec<ModelCheckpoint>) -> Result<Self, ModelError> {
        let first = members
            .first()
            .ok_or_else(|| ModelError::InvalidSpec("empty ensemble".into()))?;
        for m in &members[1..] {
            if m.spec.arch != first.spec.arch {
                return Err(ModelError::ArchMismatch {
                    expected: first.spec.arch,
                    found: m.spec.arch,
                });
            }
            if m.spec != first.spec {
                return Err(ModelError::InvalidSpec("ensemble members differ in geometry".into()));
            }
        }
        Ok(Ensemble { members })
    }

    pub fn members(&self) -> &[ModelCheckpoint] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn arch(&self) -> ArchitectureId {
        self.members[0].spec.arch
    }

    pub fn spec(&self) -> &ArchSpec {
        &self.members[0].spec
    }

    pub fn scorer(&self) -> Result<EnsembleScorer, ModelError> {
        EnsembleScorer::from_checkpoints(&self.members)
    }

    /// Writes `member_NN.ckpt` files plus the descriptor into `dir`.
    pub fn save(&self, dir: &Path) -> Result<PathBuf, TrainError> {
        let io = |path: &Path, e: std::io::Error| TrainError::Io {
            path: path.to_path_buf(),
            detail: e.to_string(),
        };
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let mut names = Vec::with_capacity(self.members.len());
        for (i, m) in self.members.iter().enumerate() {
            let name = format!("member_{i:02}.ckpt");
            m.save(&dir.join(&name))?;
            names.push(name);
        }
        let descriptor = Descriptor {
            arch: self.arch().to_string(),
            input_len: self.spec().input_len,
            members: names,
        };
        let path = dir.join(ENSEMBLE_DESCRIPTOR);
        let json = serde_json::to_string_pretty(&descriptor).expect("descriptor serializes");
        fs::write(&path, json + "\n").map_err(|e| io(&path, e))?;
        Ok(path)
    }

    /// Loads from a descriptor file, or from a directory containing one.
    /// A single checkpoint file loads as a one-member ensemble.
    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let descriptor_path = if path.is_dir() {
            path.join(ENSEMBLE_DESCRIPTOR)
        } else {
            path.to_path_buf()
        };
        let bytes = fs::read(&descriptor_path).map_err(|source| ModelError::Io {
            path: descriptor_path.clone(),
            source,
        })?;
        if bytes.starts_with(crate::models::CHECKPOINT_MAGIC) {
            return Ensemble::new(vec![ModelCheckpoint::from_bytes(&bytes)?]);
        }
        let descriptor: Descriptor = serde_json::from_slice(&bytes)
            .map_err(|e| ModelError::Corrupt(format!("{}: {e}", descriptor_path.display())))?;
        let arch: ArchitectureId = descriptor.arch.parse()?;
        let base = descriptor_path.parent().unwrap_or(Path::new("."));
        let members = descriptor
            .members
            .iter()
            .map(|m| ModelCheckpoint::load(&base.join(m)))
            .collect::<Result<Vec<_>, _>>()?;
        let ens = Ensemble::new(members)?;
        if ens.arch() != arch {
            return Err(ModelError::ArchMismatch {
                expected: arch,
                found: ens.arch(),
            });
        }
        Ok(ens)
    }
}

/// Eval-ready member networks with their fused first layers.
pub struct EnsembleScorer {
    members: Vec<(Network, FusedEmbedConv)>,
    input_len: usize,
}

impl EnsembleScorer {
    pub fn from_checkpoints(members: &[ModelCheckpoint]) -> Result<Self, ModelError> {
        if members.is_empty() {
            return Err(ModelError::InvalidSpec("empty ensemble".into()));
        }
        let members = members
            .iter()
            .map(|m| {
                let net = m.to_network()?;
                let fused = FusedEmbedConv::new(net.embedding(), &net.convs()[0]);
                Ok((net, fused))
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        let input_len = members[0].0.spec().input_len;
        Ok(EnsembleScorer { members, input_len })
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    /// Each member's score on `seq`, in member order.
    pub fn member_scores(&self, seq: &ByteSequence) -> Result<Vec<f64>, ModelError> {
        self.members
            .iter()
            .map(|(net, fused)| net.scorer_with(fused).score(seq))
            .collect()
    }

    /// Arithmetic mean of member scores.
    pub fn score(&self, seq: &ByteSequence) -> Result<f64, ModelError> {
        let scores = self.member_scores(seq)?;
        Ok(scores.iter().sum::<f64>() / scores.len() as f64)
    }
}

pub fn ensemble_score(ens: &Ensemble, seq: &ByteSequence) -> Result<f64, ModelError> {
    ens.scorer()?.score(seq)
}

/// Scores samples in parallel; output order matches input order.
pub fn score_samples(scorer: &EnsembleScorer, samples: &[LabeledSample]) -> Result<Vec<ScoredSample>, TrainError> {
    samples
        .par_iter()
        .map(|s| {
            let score = scorer.score(&s.bytes)?;
            Ok(ScoredSample::new(s.id.clone(), s.label, score)?)
        })
        .collect()
}

/// Trains `n` members with seeds `seed, seed + 1, ...`, concurrently.
pub fn train_ensemble(
    config: &TrainConfig,
    n: usize,
    train: &[LabeledSample],
    val: &[LabeledSample],
) -> Result<(Ensemble, Vec<Vec<EpochRecord>>), TrainError> {
    if n == 0 {
        return Err(TrainError::Config("ensemble size must be at least 1".into()));
    }
    let outcomes: Vec<_> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut c = config.clone();
            c.seed = config.seed.wrapping_add(i as u64);
            train_one(&c, train, val).map_err(|e| TrainError::Member {
                index: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<_, _>>()?;
    let (members, logs): (Vec<_>, Vec<_>) = outcomes.into_iter().map(|o| (o.checkpoint, o.log)).unzip();
    Ok((Ensemble::new(members)?, logs))
}
