use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use super::{CorpusError, Label, Split};

const FAMILY_PREFIX: &str = "family_";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Label,
    pub first_seen: Option<NaiveDate>,
    /// vendor name -> family name
    pub families: BTreeMap<String, String>,
    pub split: Option<Split>,
}

impl ManifestEntry {
    pub fn new(path: impl Into<PathBuf>, label: Label) -> Self {
        ManifestEntry {
            path: path.into(),
            label,
            first_seen: None,
            families: BTreeMap::new(),
            split: None,
        }
    }

    pub fn with_date(mut self, date: NaiveDate) -> Self {
        self.first_seen = Some(date);
        self
    }

    pub fn with_family(mut self, vendor: &str, family: &str) -> Self {
        self.families.insert(vendor.to_string(), family.to_string());
        self
    }

    /// Stable identifier used in reports: the path as written in the manifest.
    pub fn id(&self) -> String {
        self.path.to_string_lossy().into_owned()
    }
}

/// An immutable, validated list of corpus entries.
///
/// Relative paths are resolved against `base_dir`, which is the manifest's
/// own directory when it was read from disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    entries: Vec<ManifestEntry>,
    base_dir: Option<PathBuf>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.path.clone()) {
                return Err(CorpusError::Manifest(format!(
                    "duplicate path {}",
                    e.path.display()
                )));
            }
            if e.label == Label::Malicious && e.first_seen.is_none() {
                return Err(CorpusError::Manifest(format!(
                    "malicious entry {} has no first_seen date",
                    e.path.display()
                )));
            }
        }
        let with_split = entries.iter().filter(|e| e.split.is_some()).count();
        if with_split != 0 && with_split != entries.len() {
            return Err(CorpusError::Manifest(format!(
                "{with_split} of {} entries carry a split; either all or none must",
                entries.len()
            )));
        }
        Ok(DatasetManifest {
            entries,
            base_dir: None,
        })
    }

    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = Some(dir.into());
        self
    }

    pub fn base_dir(&self) -> Option<&Path> {
        self.base_dir.as_deref()
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<ManifestEntry> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn has_splits(&self) -> bool {
        !self.entries.is_empty() && self.entries.iter().all(|e| e.split.is_some())
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        match &self.base_dir {
            Some(base) if entry.path.is_relative() => base.join(&entry.path),
            _ => entry.path.clone(),
        }
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == Some(split))
    }

    /// Sorted union of vendor names across all entries.
    pub fn vendors(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.entries.iter().flat_map(|e| e.families.keys()).collect();
        set.into_iter().cloned().collect()
    }

    /// Loads every entry of `split` (or all entries) as fixed-length byte sequences.
    pub fn load_samples(
        &self,
        split: Option<Split>,
        input_len: usize,
    ) -> Result<Vec<super::LabeledSample>, CorpusError> {
        use rayon::prelude::*;
        let selected: Vec<&ManifestEntry> = self
            .entries
            .iter()
            .filter(|e| split.is_none() || e.split == split)
            .collect();
        selected
            .par_iter()
            .map(|e| {
                let bytes = super::ByteSequence::load(&self.resolve(e), input_len)?;
                Ok(super::LabeledSample::new(e.id(), e.label, bytes))
            })
            .collect()
    }

    pub fn read_csv(path: &Path) -> Result<Self, CorpusError> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (Some(path_col), Some(label_col)) = (col("path"), col("label")) else {
            return Err(CorpusError::Manifest(
                "manifest header must contain path and label".into(),
            ));
        };
        let date_col = col("first_seen");
        let split_col = col("split");
        let family_cols: Vec<(usize, String)> = headers
            .iter()
            .enumerate()
            .filter_map(|(i, h)| h.strip_prefix(FAMILY_PREFIX).map(|v| (i, v.to_string())))
            .collect();

        let mut entries = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let cell = |i: Option<usize>| {
                i.and_then(|i| record.get(i))
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
            };
            let mut entry = ManifestEntry::new(
                cell(Some(path_col)).ok_or_else(|| {
                    CorpusError::Manifest(format!("row {}: empty path", line + 2))
                })?,
                cell(Some(label_col))
                    .ok_or_else(|| CorpusError::Manifest(format!("row {}: empty label", line + 2)))?
                    .parse()?,
            );
            if let Some(d) = cell(date_col) {
                entry.first_seen = Some(NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|e| {
                    CorpusError::Manifest(format!("row {}: bad date {d:?}: {e}", line + 2))
                })?);
            }
            if let Some(s) = cell(split_col) {
                entry.split = Some(s.parse()?);
            }
            for (i, vendor) in &family_cols {
                if let Some(fam) = cell(Some(*i)) {
                    entry.families.insert(vendor.clone(), fam.to_string());
                }
            }
            entries.push(entry);
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(DatasetManifest::new(entries)?.with_base_dir(base))
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CorpusError> {
        let vendors = self.vendors();
        let mut writer = csv::Writer::from_path(path)?;
        let mut header = vec![
            "path".to_string(),
            "label".into(),
            "first_seen".into(),
            "split".into(),
        ];
        header.extend(vendors.iter().map(|v| format!("{FAMILY_PREFIX}{v}")));
        writer.write_record(&header)?;
        for e in &self.entries {
            let mut row = vec![
                e.path.to_string_lossy().into_owned(),
                e.label.to_string(),
                e.first_seen.map(|d| d.format("%Y-%m-%d").to_string()).unwrap_or_default(),
                e.split.map(|s| s.to_string()).unwrap_or_default(),
            ];
            row.extend(
                vendors
                    .iter()
                    .map(|v| e.families.get(v).cloned().unwrap_or_default()),
            );
            writer.write_record(&row)?;
        }
        writer.flush().map_err(|source| CorpusError::Write {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(())
    }
}
