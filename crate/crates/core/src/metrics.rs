//! Confusion counts, detection at a fixed false-positive budget, ROC curves
//! and threshold transfer.
//!
//! A sample is predicted malicious when `score >= threshold`.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::corpus::Label;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("sample {id}: score {score} is not a finite value in [0, 1]")]
    InvalidScore { id: String, score: f64 },
    #[error("need both benign and malicious samples")]
    SingleClass,
    #[error("FPR budget {0} outside [0, 1)")]
    InvalidBudget(f64),
    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredSample {
    pub id: String,
    pub label: Label,
    pub score: f64,
}

impl ScoredSample {
    pub fn new(id: impl Into<String>, label: Label, score: f64) -> Result<Self, MetricsError> {
        let id = id.into();
        if !score.is_finite() || !(0.0..=1.0).contains(&score) {
            return Err(MetricsError::InvalidScore { id, score });
        }
        Ok(ScoredSample { id, label, score })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn malicious(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn benign(&self) -> usize {
        self.fp + self.tn
    }

    /// TP / (TP + FN); NaN without malicious samples.
    pub fn detection(&self) -> f64 {
        ratio(self.tp, self.malicious())
    }

    /// FP / (FP + TN); NaN without benign samples.
    pub fn fpr(&self) -> f64 {
        ratio(self.fp, self.benign())
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion(samples: &[ScoredSample], threshold: f64) -> Confusion {
    let mut c = Confusion::default();
    for s in samples {
        match (s.label, s.score >= threshold) {
            (Label::Malicious, true) => c.tp += 1,
            (Label::Malicious, false) => c.fn_ += 1,
            (Label::Benign, true) => c.fp += 1,
            (Label::Benign, false) => c.tn += 1,
        }
    }
    c
}

/// Metrics of one threshold on one set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub detection: f64,
    pub fpr: f64,
    pub confusion: Confusion,
}

impl OperatingPoint {
    fn at(samples: &[ScoredSample], threshold: f64) -> Self {
        let confusion = confusion(samples, threshold);
        OperatingPoint {
            threshold,
            detection: confusion.detection(),
            fpr: confusion.fpr(),
            confusion,
        }
    }
}

fn class_counts(samples: &[ScoredSample]) -> (usize, usize) {
    let mal = samples.iter().filter(|s| s.label.is_malicious()).count();
    (samples.len() - mal, mal)
}

/// Scores sorted descending, grouped by distinct value, with the cumulative
/// (benign, malicious) counts at or above each value.
fn cumulative_by_score(samples: &[ScoredSample]) -> Vec<(f64, usize, usize)> {
    let mut sorted: Vec<(f64, bool)> = samples.iter().map(|s| (s.score, s.label.is_malicious())).collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out: Vec<(f64, usize, usize)> = Vec::new();
    let (mut fp, mut tp) = (0, 0);
    for (i, &(score, mal)) in sorted.iter().enumerate() {
        if mal {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_group = sorted.get(i + 1).map_or(true, |next| next.0 != score);
        if last_of_group {
            out.push((score, fp, tp));
        }
    }
    out
}

/// The smallest threshold whose FPR stays within `budget`, with its detection.
///
/// When only the all-benign threshold (+inf) meets the budget, that threshold
/// is returned with detection 0.
pub fn detection_at_fpr(samples: &[ScoredSample], budget: f64) -> Result<OperatingPoint, MetricsError> {
    if !(0.0..1.0).contains(&budget) {
        return Err(MetricsError::InvalidBudget(budget));
    }
    let (benign, malicious) = class_counts(samples);
    if benign == 0 || malicious == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut threshold = f64::INFINITY;
    for (score, fp, _) in cumulative_by_score(samples) {
        if fp as f64 / benign as f64 <= budget {
            threshold = score;
        } else {
            break;
        }
    }
    Ok(OperatingPoint::at(samples, threshold))
}

/// Metrics of a frozen threshold on a (possibly single-class) set. Missing
/// classes yield NaN for the corresponding rate.
pub fn apply_threshold(samples: &[ScoredSample], threshold: f64) -> OperatingPoint {
    OperatingPoint::at(samples, threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub detection: f64,
}

/// Points ordered by descending threshold, starting at (+inf, 0, 0) and
/// ending at the lowest score with (1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Area under the curve by the trapezoid rule.
    pub fn auc(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].detection + w[0].detection) / 2.0)
            .sum()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), MetricsError> {
        let wrap = |source| MetricsError::Write {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(wrap)?;
        w.write_record(["threshold", "fpr", "detection"]).map_err(wrap)?;
        for p in &self.points {
            w.write_record([p.threshold.to_string(), p.fpr.to_string(), p.detection.to_string()])
                .map_err(wrap)?;
        }
        w.flush().map_err(|e| wrap(e.into()))
    }
}

pub fn roc(samples: &[ScoredSample]) -> Result<RocCurve, MetricsError> {
    let (benign, malicious) = class_counts(samples);
    if benign == 0 || malicious == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        detection: 0.0,
    }];
    for (score, fp, tp) in cumulative_by_score(samples) {
        points.push(RocPoint {
            threshold: score,
            fpr: fp as f64 / benign as f64,
            detection: tp as f64 / malicious as f64,
        });
    }
    Ok(RocCurve { points })
}

/// One row of the `set,metric,value` evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub set: String,
    pub metric: String,
    pub value: f64,
}

impl ReportRow {
    pub fn new(set: impl Into<String>, metric: impl Into<String>, value: f64) -> Self {
        ReportRow {
            set: set.into(),
            metric: metric.into(),
            value,
        }
    }
}

pub fn write_report_csv(path: &Path, rows: &[ReportRow]) -> Result<(), MetricsError> {
    let wrap = |source| MetricsError::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    w.write_record(["set", "metric", "value"]).map_err(wrap)?;
    for r in rows {
        w.write_record([r.set.as_str(), r.metric.as_str(), &r.value.to_string()])
            .map_err(wrap)?;
    }
    w.flush().map_err(|e| wrap(e.into()))
}
