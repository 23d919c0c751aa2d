use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{score_samples, Adam, EnsembleScorer, TrainError};
use crate::corpus::{Label, LabeledSample};
use crate::metrics::detection_at_fpr;
use crate::models::{ArchSpec, ModelCheckpoint, ModelError, Network, TrainingMetadata};
use crate::seed::{self, Component};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub spec: ArchSpec,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// FPR budget for the early-stopping metric.
    pub target_fpr: f64,
    /// Per-class loss weights `[benign, malicious]`; off by default.
    pub class_weights: Option<[f64; 2]>,
}

impl TrainConfig {
    pub fn new(spec: ArchSpec) -> Self {
        TrainConfig {
            spec,
            epochs: 5,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
            target_fpr: 0.01,
            class_weights: None,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        self.spec.validate()?;
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be at least 1".into()));
        }
        let min_batch = if self.spec.uses_batch_norm() { 2 } else { 1 };
        if self.batch_size < min_batch {
            return Err(TrainError::Config(format!(
                "batch size {} below {min_batch} for model {}",
                self.batch_size, self.spec.arch
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::Config(format!("learning rate {}", self.learning_rate)));
        }
        if !(self.target_fpr > 0.0 && self.target_fpr < 1.0) {
            return Err(TrainError::Config(format!("FPR budget {} outside (0, 1)", self.target_fpr)));
        }
        if let Some(w) = self.class_weights {
            if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(TrainError::Config(format!("class weights {w:?}")));
            }
        }
        Ok(())
    }
}

/// One row of the per-run metrics log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_detection_at_1pct: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: ModelCheckpoint,
    pub log: Vec<EpochRecord>,
}

/// 1-based index of the best validation detection; ties go to the earliest
/// epoch and NaN never wins.
pub fn select_epoch(detections: &[f64]) -> usize {
    let mut best = 0;
    for (i, &d) in detections.iter().enumerate() {
        if best == 0 || d > detections[best - 1] || (detections[best - 1].is_nan() && !d.is_nan()) {
            best = i + 1;
        }
    }
    best
}

fn check_classes(set: &[LabeledSample], name: &str) -> Result<(), TrainError> {
    let mal = set.iter().filter(|s| s.label.is_malicious()).count();
    if mal == 0 || mal == set.len() {
        return Err(TrainError::Config(format!(
            "{name} set needs both classes ({mal} malicious of {})",
            set.len()
        )));
    }
    Ok(())
}

/// Batches of shuffled indices. Networks with batch norm never receive a
/// single-sample batch: a trailing singleton joins the previous batch.
fn batches(order: &[usize], size: usize, batch_norm: bool) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size).collect();
    if batch_norm && out.len() > 1 && out.last().is_some_and(|b| b.len() < 2) {
        out.pop();
        let start = (out.len() - 1) * size;
        *out.last_mut().expect("at least one batch") = &order[start..];
    }
    out
}

pub fn train_one(
    config: &TrainConfig,
    train: &[LabeledSample],
    val: &[LabeledSample],
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    check_classes(train, "training")?;
    check_classes(val, "validation")?;
    if train.len() < 2 && config.spec.uses_batch_norm() {
        return Err(TrainError::Config("batch norm needs at least 2 training samples".into()));
    }
    for s in train.iter().chain(val) {
        if s.bytes.len() != config.spec.input_len {
            return Err(ModelError::InputLength {
                expected: config.spec.input_len,
                found: s.bytes.len(),
            }
            .into());
        }
    }

    let started = Instant::now();
    let mut net = Network::build(config.spec.clone(), config.seed)?;
    let mut adam = Adam::new(&net, config.learning_rate);
    let targets: Vec<f64> = train.iter().map(|s| s.label.target()).collect();
    let weights: Option<Vec<f64>> = config.class_weights.map(|w| {
        train
            .iter()
            .map(|s| match s.label {
                Label::Benign => w[0],
                Label::Malicious => w[1],
            })
            .collect()
    });

    let mut log = Vec::with_capacity(config.epochs);
    let mut detections = Vec::with_capacity(config.epochs);
    let mut best: Option<ModelCheckpoint> = None;
    let mut best_detection = f64::NEG_INFINITY;
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=config.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(config.seed, Component::Shuffle, epoch as u64));
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, idx) in batches(&order, config.batch_size, config.spec.uses_batch_norm()).into_iter().enumerate() {
            let inputs: Vec<&[u8]> = idx.iter().map(|&i| train[i].bytes.data()).collect();
            let t: Vec<f64> = idx.iter().map(|&i| targets[i]).collect();
            let w: Option<Vec<f64>> = weights.as_ref().map(|w| idx.iter().map(|&i| w[i]).collect());
            let dropout_seed = seed::derive(config.seed, Component::Dropout, seed::mix(&[epoch as u64, b as u64]));
            let (loss, grads) = match net.loss_and_gradients(&inputs, &t, w.as_deref(), dropout_seed) {
                Ok(r) => r,
                Err(ModelError::NonFiniteLoss) => return Err(TrainError::Divergence { epoch, batch: b + 1 }),
                Err(e) => return Err(e.into()),
            };
            if !grads.is_finite() {
                return Err(TrainError::Divergence { epoch, batch: b + 1 });
            }
            adam.step(&mut net, &grads);
            loss_sum += loss * idx.len() as f64;
        }

        // Validation runs on the 32-bit snapshot so the recorded number is
        // exactly what a reloaded checkpoint reproduces.
        let snapshot = ModelCheckpoint::from_network(&net, TrainingMetadata::untrained(config.seed));
        let scorer = EnsembleScorer::from_checkpoints(std::slice::from_ref(&snapshot))?;
        let scored = score_samples(&scorer, val)?;
        let det = detection_at_fpr(&scored, config.target_fpr)?.detection;
        if best.is_none() || det > best_detection {
            best = Some(snapshot);
            best_detection = det;
        }
        detections.push(det);
        log.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            val_detection_at_1pct: det,
            wall_seconds: started.elapsed().as_secs_f64(),
        });
    }

    let selected = select_epoch(&detections);
    let mut checkpoint = best.expect("at least one epoch ran");
    checkpoint.metadata = TrainingMetadata {
        seed: config.seed,
        epochs_run: config.epochs,
        selected_epoch: selected,
        val_detection_at_fpr: Some(detections[selected - 1]),
        epoch_val_detections: detections,
        target_fpr: config.target_fpr,
    };
    Ok(TrainOutcome { checkpoint, log })
}

/// Writes `epoch,train_loss,val_detection_at_1pct,wall_seconds`.
pub fn write_epoch_log(path: &Path, log: &[EpochRecord]) -> Result<(), TrainError> {
    let io = |e: csv::Error| TrainError::Io {
        path: path.to_path_buf(),
        detail: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in log {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| io(e.into()))
}
