//! Binary checkpoint container. Layout (see `docs/checkpoint-format.md`):
//!
//! ```text
//! PDFCNN-CKPT\n
//! {json header on one line}\n
//! <payload_len little-endian f32 values>
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ArchSpec, ArchitectureId, BlockShape, ConvGeometry, ModelError, Network};
use crate::corpus::ByteSequence;

pub const CHECKPOINT_MAGIC: &[u8] = b"PDFCNN-CKPT\n";
const FORMAT_VERSION: u32 = 1;

/// One named tensor in 32-bit storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBlock {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub epochs_run: usize,
    /// 1-based epoch whose snapshot was kept; 0 for an untrained network.
    pub selected_epoch: usize,
    pub val_detection_at_fpr: Option<f64>,
    pub epoch_val_detections: Vec<f64>,
    pub target_fpr: f64,
}

impl TrainingMetadata {
    pub fn untrained(seed: u64) -> Self {
        TrainingMetadata {
            seed,
            epochs_run: 0,
            selected_epoch: 0,
            val_detection_at_fpr: None,
            epoch_val_detections: Vec::new(),
            target_fpr: 0.01,
        }
    }
}

/// Frozen network parameters plus the geometry needed to rebuild it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub spec: ArchSpec,
    pub params: Vec<ParamBlock>,
    pub buffers: Vec<ParamBlock>,
    pub metadata: TrainingMetadata,
}

#[derive(Serialize, Deserialize)]
struct Geometry {
    input_len: usize,
    embed_dim: usize,
    convs: Vec<ConvGeometry>,
    dropout: f64,
}

#[derive(Serialize, Deserialize)]
struct BlockEntry {
    name: String,
    kind: BlockKind,
    shape: Vec<usize>,
    /// In f32 elements from the start of the payload.
    offset: usize,
    len: usize,
}

#[derive(Serialize, Deserialize, PartialEq, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum BlockKind {
    Param,
    Buffer,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    arch: String,
    geometry: Geometry,
    blocks: Vec<BlockEntry>,
    payload_len: usize,
    metadata: TrainingMetadata,
}

fn to_blocks(shapes: Vec<BlockShape>, values: Vec<&[f64]>) -> Vec<ParamBlock> {
    shapes
        .into_iter()
        .zip(values)
        .map(|(s, v)| ParamBlock {
            name: s.name,
            shape: s.shape,
            values: v.iter().map(|&x| x as f32).collect(),
        })
        .collect()
}

fn check_blocks(expected: &[BlockShape], found: &[ParamBlock]) -> Result<(), ModelError> {
    for (i, e) in expected.iter().enumerate() {
        let Some(f) = found.get(i) else {
            return Err(ModelError::BlockMismatch {
                block: e.name.clone(),
                detail: "missing".into(),
            });
        };
        if f.name != e.name {
            return Err(ModelError::BlockMismatch {
                block: f.name.clone(),
                detail: format!("expected block {} at this position", e.name),
            });
        }
        if f.shape != e.shape || f.values.len() != e.len() {
            return Err(ModelError::BlockMismatch {
                block: f.name.clone(),
                detail: format!("shape {:?} with {} values, expected {:?}", f.shape, f.values.len(), e.shape),
            });
        }
    }
    if let Some(extra) = found.get(expected.len()) {
        return Err(ModelError::BlockMismatch {
            block: extra.name.clone(),
            detail: "unexpected block".into(),
        });
    }
    Ok(())
}

impl ModelCheckpoint {
    /// Snapshot a network; values are rounded to 32-bit.
    pub fn from_network(net: &Network, metadata: TrainingMetadata) -> Self {
        let spec = net.spec().clone();
        ModelCheckpoint {
            params: to_blocks(spec.parameter_blocks(), net.parameters()),
            buffers: to_blocks(spec.buffer_blocks(), net.buffers()),
            spec,
            metadata,
        }
    }

    pub fn arch(&self) -> ArchitectureId {
        self.spec.arch
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.spec.validate()?;
        check_blocks(&self.spec.parameter_blocks(), &self.params)?;
        check_blocks(&self.spec.buffer_blocks(), &self.buffers)?;
        if self.metadata.selected_epoch > self.metadata.epochs_run {
            return Err(ModelError::Corrupt(format!(
                "selected epoch {} exceeds epochs run {}",
                self.metadata.selected_epoch, self.metadata.epochs_run
            )));
        }
        if self.params.iter().chain(&self.buffers).any(|b| b.values.iter().any(|v| !v.is_finite())) {
            return Err(ModelError::Corrupt("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn block(&self, name: &str) -> Option<&ParamBlock> {
        self.params.iter().chain(&self.buffers).find(|b| b.name == name)
    }

    pub fn block_mut(&mut self, name: &str) -> Option<&mut ParamBlock> {
        self.params.iter_mut().chain(self.buffers.iter_mut()).find(|b| b.name == name)
    }

    /// Rebuild an eval-ready network.
    pub fn to_network(&self) -> Result<Network, ModelError> {
        self.validate()?;
        let widen = |blocks: &[ParamBlock]| -> Vec<Vec<f64>> {
            blocks.iter().map(|b| b.values.iter().map(|&v| f64::from(v)).collect()).collect()
        };
        Network::from_parts(self.spec.clone(), widen(&self.params), widen(&self.buffers))
    }

    pub fn score(&self, seq: &ByteSequence) -> Result<f64, ModelError> {
        self.to_network()?.score(seq)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, ModelError> {
        self.validate()?;
        let mut blocks = Vec::new();
        let mut offset = 0;
        for (kind, list) in [(BlockKind::Param, &self.params), (BlockKind::Buffer, &self.buffers)] {
            for b in list.iter() {
                blocks.push(BlockEntry {
                    name: b.name.clone(),
                    kind,
                    shape: b.shape.clone(),
                    offset,
                    len: b.values.len(),
                });
                offset += b.values.len();
            }
        }
        let header = Header {
            version: FORMAT_VERSION,
            arch: self.spec.arch.to_string(),
            geometry: Geometry {
                input_len: self.spec.input_len,
                embed_dim: self.spec.embed_dim,
                convs: self.spec.convs.clone(),
                dropout: self.spec.dropout,
            },
            blocks,
            payload_len: offset,
            metadata: self.metadata.clone(),
        };
        let json = serde_json::to_string(&header).map_err(|e| ModelError::Corrupt(e.to_string()))?;
        let mut out = Vec::with_capacity(CHECKPOINT_MAGIC.len() + json.len() + 1 + offset * 4);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(json.as_bytes());
        out.push(b'\n');
        for b in self.params.iter().chain(&self.buffers) {
            for v in &b.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let rest = bytes
            .strip_prefix(CHECKPOINT_MAGIC)
            .ok_or_else(|| ModelError::Corrupt("missing magic line".into()))?;
        let newline = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| ModelError::Corrupt("unterminated header".into()))?;
        let header: Header =
            serde_json::from_slice(&rest[..newline]).map_err(|e| ModelError::Corrupt(format!("header: {e}")))?;
        if header.version != FORMAT_VERSION {
            return Err(ModelError::Corrupt(format!("unsupported version {}", header.version)));
        }
        let arch: ArchitectureId = header.arch.parse()?;
        let payload = &rest[newline + 1..];
        if payload.len() != header.payload_len * 4 {
            return Err(ModelError::Corrupt(format!(
                "payload has {} bytes, header declares {} floats",
                payload.len(),
                header.payload_len
            )));
        }
        let spec = ArchSpec {
            arch,
            input_len: header.geometry.input_len,
            embed_dim: header.geometry.embed_dim,
            convs: header.geometry.convs,
            dropout: header.geometry.dropout,
        };
        let mut params = Vec::new();
        let mut buffers = Vec::new();
        for entry in header.blocks {
            let end = entry
                .offset
                .checked_add(entry.len)
                .filter(|&e| e <= header.payload_len)
                .ok_or_else(|| ModelError::Corrupt(format!("block {} lies outside the payload", entry.name)))?;
            let values = payload[entry.offset * 4..end * 4]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            let block = ParamBlock {
                name: entry.name,
                shape: entry.shape,
                values,
            };
            match entry.kind {
                BlockKind::Param => params.push(block),
                BlockKind::Buffer => buffers.push(block),
            }
        }
        let ckpt = ModelCheckpoint {
            spec,
            params,
            buffers,
            metadata: header.metadata,
        };
        ckpt.validate()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let bytes = self.to_bytes()?;
        fs::write(path, bytes).map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let bytes = fs::read(path).map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}
