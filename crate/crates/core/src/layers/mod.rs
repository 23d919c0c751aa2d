//! Forward and backward passes for the layers the three networks use.
//!
//! Tensors are position-major (`rows` = sequence positions, `cols` =
//! channels). Everything is computed in `f64`; gradients are returned or
//! accumulated explicitly rather than through an autodiff graph.

mod activation;
mod batchnorm;
mod conv;
mod dense;
mod dropout;
mod embedding;
mod pool;

use thiserror::Error;

pub use activation::{relu, relu_backward, relu_in_place, sigmoid, sigmoid_grad, softplus};
pub use batchnorm::{BatchNorm, BatchNormCache, BatchNormGradients, BN_EPSILON, BN_MOMENTUM};
pub use conv::{conv_output_len, Conv1d, ConvGradients};
pub use dense::{Dense, DenseGradients};
pub use dropout::dropout;
pub use embedding::{Embedding, BYTE_VALUES};
pub use pool::{global_max_pool, global_max_pool_backward, Pooled};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayerError {
    #[error("{layer}: shape mismatch, expected {expected}, found {found}")]
    ShapeMismatch {
        layer: &'static str,
        expected: String,
        found: String,
    },
    #[error("{layer}: non-finite value")]
    NonFinite { layer: &'static str },
    #[error("{layer}: empty input")]
    EmptyInput { layer: &'static str },
    #[error("batch norm needs at least 2 samples in train mode, got {0}")]
    BatchTooSmall(usize),
    #[error("dropout probability {0} outside [0, 1)")]
    InvalidProbability(f64),
}

pub(crate) fn shape_err(layer: &'static str, expected: impl ToString, found: impl ToString) -> LayerError {
    LayerError::ShapeMismatch {
        layer,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Row-major `rows x cols` matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2D {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Tensor2D {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, LayerError> {
        if values.len() != rows * cols {
            return Err(shape_err("tensor", rows * cols, values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LayerError::NonFinite { layer: "tensor" });
        }
        Ok(Tensor2D { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor2D {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    /// Builds a tensor without the finiteness scan; callers guarantee the shape.
    pub(crate) fn from_raw(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), rows * cols);
        Tensor2D { rows, cols, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    pub fn ensure_finite(&self, layer: &'static str) -> Result<(), LayerError> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(LayerError::NonFinite { layer })
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
