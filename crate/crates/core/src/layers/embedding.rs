use super::{shape_err, LayerError, Tensor2D};

/// Number of distinct byte values.
pub const BYTE_VALUES: usize = 256;

/// Learnable byte embedding `W` of shape `dim x 256`.
///
/// Embedding byte `b` selects column `b` of `W`, i.e. `W^T x` with `x` the
/// one-hot vector of `b`. Padding bytes are ordinary zeros and use column 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    dim: usize,
    /// Row-major `dim x 256`: entry `(c, b)` at `c * 256 + b`.
    pub weights: Vec<f64>,
}

impl Embedding {
    pub fn new(dim: usize, weights: Vec<f64>) -> Result<Self, LayerError> {
        if weights.len() != dim * BYTE_VALUES {
            return Err(shape_err("embedding", dim * BYTE_VALUES, weights.len()));
        }
        Ok(Embedding { dim, weights })
    }

    pub fn zeros(dim: usize) -> Self {
        Embedding {
            dim,
            weights: vec![0.0; dim * BYTE_VALUES],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weight(&self, channel: usize, byte: u8) -> f64 {
        self.weights[channel * BYTE_VALUES + byte as usize]
    }

    /// Column `byte` of `W`.
    pub fn vector(&self, byte: u8) -> Vec<f64> {
        (0..self.dim).map(|c| self.weight(c, byte)).collect()
    }

    pub fn forward(&self, bytes: &[u8]) -> Tensor2D {
        let table: Vec<Vec<f64>> = (0..BYTE_VALUES).map(|b| self.vector(b as u8)).collect();
        let mut values = Vec::with_capacity(bytes.len() * self.dim);
        for &b in bytes {
            values.extend_from_slice(&table[b as usize]);
        }
        Tensor2D::from_raw(bytes.len(), self.dim, values)
    }

    /// Accumulates the gradient of `W` into `grad` (same layout as `weights`).
    /// Only the columns of bytes that occur in `bytes` receive gradient.
    pub fn backward(&self, bytes: &[u8], upstream: &Tensor2D, grad: &mut [f64]) -> Result<(), LayerError> {
        if upstream.rows() != bytes.len() || upstream.cols() != self.dim {
            return Err(shape_err(
                "embedding",
                format!("{}x{}", bytes.len(), self.dim),
                format!("{}x{}", upstream.rows(), upstream.cols()),
            ));
        }
        if grad.len() != self.weights.len() {
            return Err(shape_err("embedding", self.weights.len(), grad.len()));
        }
        for (t, &b) in bytes.iter().enumerate() {
            for (c, g) in upstream.row(t).iter().enumerate() {
                grad[c * BYTE_VALUES + b as usize] += g;
            }
        }
        Ok(())
    }
}
