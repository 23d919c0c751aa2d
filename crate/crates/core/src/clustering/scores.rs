use std::collections::BTreeMap;

use super::{ClusterAssignment, ClusterError, Labeling};

/// Which samples count in a completeness denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CompletenessScope {
    /// Occurrences of the family inside any cluster (noise excluded).
    #[default]
    Clustered,
    /// Occurrences of the family anywhere, noise included.
    AllSamples,
}

/// Per-cluster summary for one vendor.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    pub cluster: usize,
    pub size: usize,
    pub detected: usize,
    /// Most common detected family; ties go to the lexicographically smallest.
    pub dominant: Option<String>,
    pub dominant_count: usize,
    /// NaN when the cluster has no detected member.
    pub homogeneity: f64,
    /// NaN when the cluster has no detected member.
    pub completeness: f64,
    pub detection: f64,
}

fn check(assign: &ClusterAssignment, labeling: &Labeling) -> Result<(), ClusterError> {
    if assign.len() != labeling.families.len() {
        return Err(ClusterError::Coverage {
            assignment: assign.len(),
            labeling: labeling.families.len(),
        });
    }
    Ok(())
}

fn dominant<'a>(counts: &BTreeMap<&'a str, usize>) -> Option<(&'a str, usize)> {
    // BTreeMap iterates in key order, so strict `>` keeps the smallest tied key.
    let mut best: Option<(&str, usize)> = None;
    for (&fam, &c) in counts {
        if best.map_or(true, |(_, b)| c > b) {
            best = Some((fam, c));
        }
    }
    best
}

pub fn cluster_stats(
    assign: &ClusterAssignment,
    labeling: &Labeling,
    scope: CompletenessScope,
) -> Result<Vec<ClusterStats>, ClusterError> {
    check(assign, labeling)?;
    let k = assign.n_clusters();
    let mut per_cluster: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); k];
    let mut sizes = vec![0usize; k];
    let mut totals: BTreeMap<&str, usize> = BTreeMap::new();
    for (label, fam) in assign.labels().iter().zip(&labeling.families) {
        if let Some(c) = label {
            sizes[*c] += 1;
        }
        let Some(fam) = fam.as_deref() else { continue };
        match label {
            Some(c) => {
                *per_cluster[*c].entry(fam).or_insert(0) += 1;
                *totals.entry(fam).or_insert(0) += 1;
            }
            None if scope == CompletenessScope::AllSamples => *totals.entry(fam).or_insert(0) += 1,
            None => {}
        }
    }
    Ok((0..k)
        .map(|c| {
            let detected: usize = per_cluster[c].values().sum();
            let dom = dominant(&per_cluster[c]);
            let (homogeneity, completeness) = match dom {
                Some((fam, n)) => (n as f64 / detected as f64, n as f64 / totals[fam] as f64),
                None => (f64::NAN, f64::NAN),
            };
            ClusterStats {
                cluster: c,
                size: sizes[c],
                detected,
                dominant: dom.map(|(f, _)| f.to_string()),
                dominant_count: dom.map_or(0, |(_, n)| n),
                homogeneity,
                completeness,
                detection: detected as f64 / sizes[c] as f64,
            }
        })
        .collect())
}

/// Share of a cluster's detected members carrying its most common family.
pub fn homogeneity(assign: &ClusterAssignment, labeling: &Labeling) -> Result<Vec<f64>, ClusterError> {
    Ok(cluster_stats(assign, labeling, CompletenessScope::Clustered)?
        .into_iter()
        .map(|s| s.homogeneity)
        .collect())
}

/// Share of the dominant family's occurrences that fall inside the cluster.
pub fn completeness(
    assign: &ClusterAssignment,
    labeling: &Labeling,
    scope: CompletenessScope,
) -> Result<Vec<f64>, ClusterError> {
    Ok(cluster_stats(assign, labeling, scope)?
        .into_iter()
        .map(|s| s.completeness)
        .collect())
}

/// Fraction of each cluster's members the vendor flags. Noise is ignored.
pub fn cluster_detection(assign: &ClusterAssignment, labeling: &Labeling) -> Result<Vec<f64>, ClusterError> {
    Ok(cluster_stats(assign, labeling, CompletenessScope::Clustered)?
        .into_iter()
        .map(|s| s.detection)
        .collect())
}
