use std::path::Path;

use super::{ClusterAssignment, ClusterError, ClusterStats, FeatureMatrix, Labeling, Projection, UNDETECTED};

fn io_err(path: &Path, e: impl std::fmt::Display) -> ClusterError {
    ClusterError::Io {
        path: path.to_path_buf(),
        detail: e.to_string(),
    }
}

fn cluster_cell(label: Option<usize>) -> String {
    label.map_or("-1".to_string(), |c| c.to_string())
}

fn fmt_rate(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x}")
    }
}

/// One row per sample and vendor. Noise is written as cluster `-1`, a NaN
/// score as an empty cell. Without labelings each sample gets one row with
/// empty vendor and family.
pub fn write_assignment_csv(
    path: &Path,
    ids: &[String],
    assign: &ClusterAssignment,
    scores: &[f64],
    labelings: &[Labeling],
) -> Result<(), ClusterError> {
    if ids.len() != assign.len() || scores.len() != assign.len() {
        return Err(ClusterError::Config(format!(
            "{} ids and {} scores for {} assigned samples",
            ids.len(),
            scores.len(),
            assign.len()
        )));
    }
    for l in labelings {
        if l.families.len() != assign.len() {
            return Err(ClusterError::Coverage {
                assignment: assign.len(),
                labeling: l.families.len(),
            });
        }
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["sample_id", "cluster", "score", "vendor", "family"])
        .map_err(|e| io_err(path, e))?;
    for (i, id) in ids.iter().enumerate() {
        let cluster = cluster_cell(assign.labels()[i]);
        let score = if scores[i].is_nan() { String::new() } else { format!("{}", scores[i]) };
        if labelings.is_empty() {
            w.write_record([id.as_str(), &cluster, &score, "", ""]).map_err(|e| io_err(path, e))?;
        }
        for l in labelings {
            let fam = l.families[i].as_deref().unwrap_or(UNDETECTED);
            w.write_record([id.as_str(), &cluster, &score, &l.vendor, fam])
                .map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_metrics_csv(path: &Path, per_vendor: &[(String, Vec<ClusterStats>)]) -> Result<(), ClusterError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["cluster", "vendor", "homogeneity", "completeness", "detection", "size"])
        .map_err(|e| io_err(path, e))?;
    for (vendor, stats) in per_vendor {
        for s in stats {
            w.write_record([
                &s.cluster.to_string(),
                vendor,
                &fmt_rate(s.homogeneity),
                &fmt_rate(s.completeness),
                &fmt_rate(s.detection),
                &s.size.to_string(),
            ])
            .map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_projection_csv(
    path: &Path,
    ids: &[String],
    projection: &Projection,
    assign: &ClusterAssignment,
) -> Result<(), ClusterError> {
    if ids.len() != projection.coords.len() || ids.len() != assign.len() {
        return Err(ClusterError::Config("projection, ids and assignment differ in length".into()));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["sample_id", "x", "y", "cluster"]).map_err(|e| io_err(path, e))?;
    for ((id, c), l) in ids.iter().zip(&projection.coords).zip(assign.labels()) {
        w.write_record([id, &format!("{}", c[0]), &format!("{}", c[1]), &cluster_cell(*l)])
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads `sample_id,<f0>,<f1>,...` rows into a feature matrix.
pub fn read_feature_csv(path: &Path) -> Result<FeatureMatrix, ClusterError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let mut cells = rec.iter();
        let id = cells
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| ClusterError::Config(format!("row {} has no sample id", line + 2)))?;
        let row = cells
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| ClusterError::Config(format!("row {}: bad feature value {c:?}", line + 2)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        ids.push(id.to_string());
        rows.push(row);
    }
    FeatureMatrix::new(ids, rows)
}
