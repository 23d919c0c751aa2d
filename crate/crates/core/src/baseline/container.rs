//! Baseline container, mirroring the checkpoint layout:
//!
//! ```text
//! PDFCNN-BASELINE\n
//! {json header on one line}\n
//! <payload_len little-endian f64 values>
//! ```
//!
//! The payload holds the idf weights followed by each tree's nodes as
//! `feature, threshold, left, right, value` (feature −1 marks a leaf).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BaselineError, BaselineModel, FeatureVocabulary, ForestModel, ForestParams, Node, Tree};

pub const BASELINE_MAGIC: &[u8] = b"PDFCNN-BASELINE\n";
const NODE_WIDTH: usize = 5;

#[derive(Serialize, Deserialize)]
struct TreeEntry {
    offset: usize,
    nodes: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    tags: Vec<String>,
    idf_offset: usize,
    params: ForestParams,
    n_features: usize,
    degenerate: bool,
    trees: Vec<TreeEntry>,
    payload_len: usize,
}

impl BaselineModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut payload: Vec<f64> = self.vocabulary.idf().to_vec();
        let mut trees = Vec::with_capacity(self.forest.trees.len());
        for t in &self.forest.trees {
            trees.push(TreeEntry {
                offset: payload.len(),
                nodes: t.nodes.len(),
            });
            for n in &t.nodes {
                payload.extend([
                    n.feature.map_or(-1.0, |f| f as f64),
                    n.threshold,
                    n.left as f64,
                    n.right as f64,
                    n.value,
                ]);
            }
        }
        let header = Header {
            version: 1,
            tags: self.vocabulary.tags().to_vec(),
            idf_offset: 0,
            params: self.forest.params.clone(),
            n_features: self.forest.n_features,
            degenerate: self.forest.degenerate,
            trees,
            payload_len: payload.len(),
        };
        let mut out = BASELINE_MAGIC.to_vec();
        out.extend(serde_json::to_string(&header).expect("header serializes").as_bytes());
        out.push(b'\n');
        for v in payload {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BaselineError> {
        let corrupt = |m: String| BaselineError::Corrupt(m);
        let rest = bytes
            .strip_prefix(BASELINE_MAGIC)
            .ok_or_else(|| corrupt("missing magic line".into()))?;
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| corrupt("unterminated header".into()))?;
        let header: Header = serde_json::from_slice(&rest[..nl]).map_err(|e| corrupt(format!("header: {e}")))?;
        let raw = &rest[nl + 1..];
        if raw.len() != header.payload_len * 8 {
            return Err(corrupt(format!("payload has {} bytes, expected {}", raw.len(), header.payload_len * 8)));
        }
        let payload: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let span = |offset: usize, len: usize| -> Result<&[f64], BaselineError> {
            payload
                .get(offset..offset.checked_add(len).ok_or_else(|| corrupt("offset overflow".into()))?)
                .ok_or_else(|| corrupt(format!("span {offset}+{len} outside payload")))
        };
        let idf = span(header.idf_offset, header.tags.len())?.to_vec();
        let vocabulary = FeatureVocabulary::new(header.tags, idf)?;
        if vocabulary.len() != header.n_features {
            return Err(corrupt(format!("{} tags but {} forest features", vocabulary.len(), header.n_features)));
        }
        let mut trees = Vec::with_capacity(header.trees.len());
        for entry in &header.trees {
            let flat = span(entry.offset, entry.nodes * NODE_WIDTH)?;
            let mut nodes = Vec::with_capacity(entry.nodes);
            for (i, rec) in flat.chunks_exact(NODE_WIDTH).enumerate() {
                let node = Node {
                    feature: if rec[0] < 0.0 { None } else { Some(rec[0] as usize) },
                    threshold: rec[1],
                    left: rec[2] as usize,
                    right: rec[3] as usize,
                    value: rec[4],
                };
                let children_ok = node.feature.is_none()
                    || (node.left > i && node.right > i && node.left < entry.nodes && node.right < entry.nodes);
                if node.feature.is_some_and(|f| f >= header.n_features) || !children_ok || !(0.0..=1.0).contains(&node.value) {
                    return Err(corrupt(format!("invalid node {i}")));
                }
                nodes.push(node);
            }
            if nodes.is_empty() {
                return Err(corrupt("empty tree".into()));
            }
            trees.push(Tree { nodes });
        }
        if trees.is_empty() {
            return Err(corrupt("forest has no trees".into()));
        }
        Ok(BaselineModel {
            vocabulary,
            forest: ForestModel {
                trees,
                n_features: header.n_features,
                params: header.params,
                degenerate: header.degenerate,
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), BaselineError> {
        fs::write(path, self.to_bytes()).map_err(|source| BaselineError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, BaselineError> {
        let bytes = fs::read(path).map_err(|source| BaselineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}
