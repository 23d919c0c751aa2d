use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, DatasetManifest, Label, Split};

/// Allocates `total` items across `weights` by the largest-remainder method.
///
/// Remainder ties go to the earlier weight so the allocation is deterministic.
/// Weights need not be normalised; all-zero weights are rejected.
pub fn largest_remainder(total: usize, weights: &[f64]) -> Option<Vec<usize>> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || !(sum > 0.0) || weights.iter().any(|w| !(*w >= 0.0)) {
        return None;
    }
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    Some(counts)
}

/// Assigns every entry to train/val/test by first-seen date.
///
/// Malware dated on or before `val_cutoff` goes to train, on or before
/// `test_cutoff` to val, and the rest to test. Benign files carry no dates, so
/// they are shuffled with `seed` and dealt out in the same proportions as the
/// malware.
pub fn chronological_split(
    manifest: &DatasetManifest,
    val_cutoff: NaiveDate,
    test_cutoff: NaiveDate,
    seed: u64,
) -> Result<DatasetManifest, CorpusError> {
    if val_cutoff >= test_cutoff {
        return Err(CorpusError::Split(format!(
            "val cutoff {val_cutoff} must precede test cutoff {test_cutoff}"
        )));
    }
    let mut entries = manifest.entries().to_vec();
    let mut malicious_counts = [0usize; 3];
    let mut benign = Vec::new();
    for (i, e) in entries.iter_mut().enumerate() {
        match e.label {
            Label::Malicious => {
                let date = e.first_seen.ok_or_else(|| {
                    CorpusError::Split(format!("malicious entry {} is undated", e.path.display()))
                })?;
                let split = if date <= val_cutoff {
                    Split::Train
                } else if date <= test_cutoff {
                    Split::Val
                } else {
                    Split::Test
                };
                malicious_counts[split as usize] += 1;
                e.split = Some(split);
            }
            Label::Benign => benign.push(i),
        }
    }
    if !benign.is_empty() {
        let weights: Vec<f64> = malicious_counts.iter().map(|&c| c as f64).collect();
        let counts = largest_remainder(benign.len(), &weights).ok_or_else(|| {
            CorpusError::Split("no malicious entries to take proportions from".into())
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        benign.shuffle(&mut rng);
        let mut cursor = benign.into_iter();
        for (split, count) in Split::ALL.into_iter().zip(counts) {
            for idx in cursor.by_ref().take(count) {
                entries[idx].split = Some(split);
            }
        }
    }
    let mut out = DatasetManifest::new(entries)?;
    if let Some(base) = manifest.base_dir() {
        out = out.with_base_dir(base);
    }
    Ok(out)
}

/// Cutoff dates that put roughly `train` and `val` fractions of the dated
/// malware into the first two splits. Each cutoff is the date of the last
/// malicious entry its fraction covers, so same-day entries stay together.
pub fn cutoffs_for_fractions(
    manifest: &DatasetManifest,
    train: f64,
    val: f64,
) -> Result<(NaiveDate, NaiveDate), CorpusError> {
    if !(train > 0.0 && val > 0.0 && train + val < 1.0) {
        return Err(CorpusError::Split(format!("fractions {train}/{val} leave no test share")));
    }
    let mut dates: Vec<NaiveDate> = manifest
        .entries()
        .iter()
        .filter(|e| e.label == Label::Malicious)
        .map(|e| {
            e.first_seen
                .ok_or_else(|| CorpusError::Split(format!("malicious entry {} is undated", e.path.display())))
        })
        .collect::<Result<_, _>>()?;
    if dates.is_empty() {
        return Err(CorpusError::Split("no malicious entries".into()));
    }
    dates.sort();
    let at = |frac: f64| dates[((frac * dates.len() as f64).ceil() as usize).clamp(1, dates.len()) - 1];
    let (v, t) = (at(train), at(train + val));
    if v >= t {
        return Err(CorpusError::Split(format!("fractions collapse onto one date {v}")));
    }
    Ok((v, t))
}
