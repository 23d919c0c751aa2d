//! The three byte-level convolutional architectures.
//!
//! | arch | stack |
//! |------|-------|
//! | A | embed(16) → conv(w16,s4,k128) → ReLU → global max pool → dense(128→1) → sigmoid |
//! | B | A plus dense(128→128) → ReLU → dropout(0.25) between pool and head |
//! | C | embed(16) → 3 × [conv → BN → ReLU] with (w16,s4,k20), (w16,s4,k40), (w4,s2,k80) → global max pool → dense(80→80) → BN → ReLU → dense(80→1) → sigmoid |
//!
//! [`ArchSpec`] carries the geometry so that shorter "desk" inputs and
//! miniature test networks reuse the same layer kinds without touching the
//! production shapes.

mod checkpoint;
mod fused;
mod network;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layers::{conv_output_len, LayerError, BYTE_VALUES};

pub use checkpoint::{ModelCheckpoint, ParamBlock, TrainingMetadata, CHECKPOINT_MAGIC};
pub use fused::FusedEmbedConv;
pub use network::{Forward, Gradients, Network, Scorer};

/// Width of the learned byte embedding.
pub const EMBED_DIM: usize = 16;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Layer(#[from] LayerError),
    #[error("input has {found} bytes, model expects {expected}")]
    InputLength { expected: usize, found: usize },
    #[error("invalid architecture spec: {0}")]
    InvalidSpec(String),
    #[error("architecture mismatch: expected {expected}, found {found}")]
    ArchMismatch {
        expected: ArchitectureId,
        found: ArchitectureId,
    },
    #[error("unknown architecture {0:?}")]
    UnknownArch(String),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint block {block}: {detail}")]
    BlockMismatch { block: String, detail: String },
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("non-finite loss")]
    NonFiniteLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArchitectureId {
    A,
    B,
    C,
}

impl fmt::Display for ArchitectureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArchitectureId::A => "A",
            ArchitectureId::B => "B",
            ArchitectureId::C => "C",
        })
    }
}

impl FromStr for ArchitectureId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(ArchitectureId::A),
            "B" | "b" => Ok(ArchitectureId::B),
            "C" | "c" => Ok(ArchitectureId::C),
            other => Err(ModelError::UnknownArch(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvGeometry {
    pub window: usize,
    pub stride: usize,
    pub kernels: usize,
}

const fn conv(window: usize, stride: usize, kernels: usize) -> ConvGeometry {
    ConvGeometry { window, stride, kernels }
}

/// Layer geometry of one network instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub arch: ArchitectureId,
    pub input_len: usize,
    pub embed_dim: usize,
    pub convs: Vec<ConvGeometry>,
    /// Dropout after the hidden dense layer; only ModelB uses it.
    pub dropout: f64,
}

/// Name and shape of one stored tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockShape {
    pub name: String,
    pub shape: Vec<usize>,
}

impl BlockShape {
    fn new(name: impl Into<String>, shape: &[usize]) -> Self {
        BlockShape {
            name: name.into(),
            shape: shape.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ArchSpec {
    pub fn production(arch: ArchitectureId) -> Self {
        ArchSpec::desk(arch, crate::corpus::INPUT_LEN)
    }

    /// Production layer widths on a shorter input.
    pub fn desk(arch: ArchitectureId, input_len: usize) -> Self {
        let (convs, dropout) = match arch {
            ArchitectureId::A => (vec![conv(16, 4, 128)], 0.0),
            ArchitectureId::B => (vec![conv(16, 4, 128)], 0.25),
            ArchitectureId::C => (vec![conv(16, 4, 20), conv(16, 4, 40), conv(4, 2, 80)], 0.0),
        };
        ArchSpec {
            arch,
            input_len,
            embed_dim: EMBED_DIM,
            convs,
            dropout,
        }
    }

    /// Tiny variant for gradient checks: 256-byte input, window 8, stride 4, 4 kernels.
    pub fn miniature(arch: ArchitectureId) -> Self {
        let mut spec = ArchSpec::desk(arch, 256);
        spec.convs = match arch {
            ArchitectureId::A | ArchitectureId::B => vec![conv(8, 4, 4)],
            ArchitectureId::C => vec![conv(8, 4, 4), conv(8, 4, 4), conv(4, 2, 4)],
        };
        spec
    }

    pub fn uses_batch_norm(&self) -> bool {
        self.arch == ArchitectureId::C
    }

    pub fn has_hidden(&self) -> bool {
        self.arch != ArchitectureId::A
    }

    /// Width of the pooled feature vector (last conv's kernel count).
    pub fn feature_width(&self) -> usize {
        self.convs.last().map_or(0, |c| c.kernels)
    }

    /// Output length after each convolution.
    pub fn conv_lengths(&self) -> Result<Vec<usize>, ModelError> {
        let mut len = self.input_len;
        let mut out = Vec::with_capacity(self.convs.len());
        for (i, c) in self.convs.iter().enumerate() {
            len = conv_output_len(len, c.window, c.stride).ok_or_else(|| {
                ModelError::InvalidSpec(format!(
                    "conv{} (window {}, stride {}) does not fit an input of length {len}",
                    i + 1,
                    c.window,
                    c.stride
                ))
            })?;
            out.push(len);
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let expected_convs = match self.arch {
            ArchitectureId::A | ArchitectureId::B => 1,
            ArchitectureId::C => 3,
        };
        if self.convs.len() != expected_convs {
            return Err(ModelError::InvalidSpec(format!(
                "model {} needs {expected_convs} conv layers, got {}",
                self.arch,
                self.convs.len()
            )));
        }
        if self.embed_dim == 0 || self.convs.iter().any(|c| c.window == 0 || c.stride == 0 || c.kernels == 0) {
            return Err(ModelError::InvalidSpec("zero-sized layer".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) || (self.arch != ArchitectureId::B && self.dropout != 0.0) {
            return Err(ModelError::InvalidSpec(format!("dropout {} not valid for model {}", self.dropout, self.arch)));
        }
        self.conv_lengths()?;
        Ok(())
    }

    /// Trainable tensors in storage order.
    pub fn parameter_blocks(&self) -> Vec<BlockShape> {
        let mut blocks = vec![BlockShape::new("embedding.weight", &[self.embed_dim, BYTE_VALUES])];
        let mut in_ch = self.embed_dim;
        for (i, c) in self.convs.iter().enumerate() {
            let n = i + 1;
            blocks.push(BlockShape::new(format!("conv{n}.weight"), &[c.kernels, c.window * in_ch]));
            blocks.push(BlockShape::new(format!("conv{n}.bias"), &[c.kernels]));
            if self.uses_batch_norm() {
                blocks.push(BlockShape::new(format!("conv{n}.bn.gamma"), &[c.kernels]));
                blocks.push(BlockShape::new(format!("conv{n}.bn.beta"), &[c.kernels]));
            }
            in_ch = c.kernels;
        }
        let d = self.feature_width();
        if self.has_hidden() {
            blocks.push(BlockShape::new("hidden.weight", &[d, d]));
            blocks.push(BlockShape::new("hidden.bias", &[d]));
            if self.uses_batch_norm() {
                blocks.push(BlockShape::new("hidden.bn.gamma", &[d]));
                blocks.push(BlockShape::new("hidden.bn.beta", &[d]));
            }
        }
        blocks.push(BlockShape::new("head.weight", &[1, d]));
        blocks.push(BlockShape::new("head.bias", &[1]));
        blocks
    }

    /// Non-trainable batch-norm running statistics in storage order.
    pub fn buffer_blocks(&self) -> Vec<BlockShape> {
        if !self.uses_batch_norm() {
            return Vec::new();
        }
        let mut blocks = Vec::new();
        for (i, c) in self.convs.iter().enumerate() {
            blocks.push(BlockShape::new(format!("conv{}.bn.running_mean", i + 1), &[c.kernels]));
            blocks.push(BlockShape::new(format!("conv{}.bn.running_var", i + 1), &[c.kernels]));
        }
        let d = self.feature_width();
        blocks.push(BlockShape::new("hidden.bn.running_mean", &[d]));
        blocks.push(BlockShape::new("hidden.bn.running_var", &[d]));
        blocks
    }

    pub fn parameter_count(&self) -> usize {
        self.parameter_blocks().iter().map(BlockShape::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn production_lengths() {
        assert_eq!(ArchSpec::production(ArchitectureId::A).conv_lengths().unwrap(), vec![49_997]);
        assert_eq!(
            ArchSpec::production(ArchitectureId::C).conv_lengths().unwrap(),
            vec![49_997, 12_496, 6_247]
        );
    }

    #[test]
    fn model_a_parameter_count() {
        assert_eq!(ArchSpec::production(ArchitectureId::A).parameter_count(), 37_121);
    }

    #[test]
    fn feature_widths() {
        assert_eq!(ArchSpec::production(ArchitectureId::A).feature_width(), 128);
        assert_eq!(ArchSpec::production(ArchitectureId::B).feature_width(), 128);
        assert_eq!(ArchSpec::production(ArchitectureId::C).feature_width(), 80);
    }

    #[test]
    fn validation_catches_bad_geometry() {
        let mut s = ArchSpec::miniature(ArchitectureId::A);
        s.input_len = 4;
        assert!(s.validate().is_err());
        let mut s = ArchSpec::miniature(ArchitectureId::A);
        s.dropout = 0.5;
        assert!(s.validate().is_err());
        for arch in [ArchitectureId::A, ArchitectureId::B, ArchitectureId::C] {
            ArchSpec::miniature(arch).validate().unwrap();
            ArchSpec::production(arch).validate().unwrap();
        }
    }

    #[test]
    fn arch_parsing() {
        assert_eq!("B".parse::<ArchitectureId>().unwrap(), ArchitectureId::B);
        assert!(matches!("D".parse::<ArchitectureId>(), Err(ModelError::UnknownArch(_))));
    }
}
