use crate::layers::{Conv1d, Embedding, Tensor2D, BYTE_VALUES};

/// Embedding folded into the first convolution.
///
/// Because the embedding is a one-hot lookup, the first convolution's output
/// at position `t` is `bias + sum_j T[j][x[t*stride + j]]`, where
/// `T[j][b] = K_j W[:, b]` is precomputed for every window offset `j` and byte
/// `b`. That replaces `window * embed_dim` multiply-adds per kernel with
/// `window` table lookups.
#[derive(Debug, Clone)]
pub struct FusedEmbedConv {
    window: usize,
    stride: usize,
    kernels: usize,
    /// `(j * 256 + b) * kernels + k`
    table: Vec<f64>,
    bias: Vec<f64>,
}

impl FusedEmbedConv {
    pub fn new(embedding: &Embedding, conv: &Conv1d) -> Self {
        let dim = embedding.dim();
        debug_assert_eq!(conv.in_channels, dim);
        let k_count = conv.kernels;
        let mut table = vec![0.0; conv.window * BYTE_VALUES * k_count];
        for j in 0..conv.window {
            for b in 0..BYTE_VALUES {
                let column = embedding.vector(b as u8);
                let out = &mut table[(j * BYTE_VALUES + b) * k_count..(j * BYTE_VALUES + b + 1) * k_count];
                for (k, o) in out.iter_mut().enumerate() {
                    let kernel = &conv.kernel(k)[j * dim..(j + 1) * dim];
                    *o = kernel.iter().zip(&column).map(|(w, e)| w * e).sum();
                }
            }
        }
        FusedEmbedConv {
            window: conv.window,
            stride: conv.stride,
            kernels: k_count,
            table,
            bias: conv.bias.clone(),
        }
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        (input_len - self.window) / self.stride + 1
    }

    fn accumulate(&self, bytes: &[u8], t: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.bias);
        let start = t * self.stride;
        for (j, &b) in bytes[start..start + self.window].iter().enumerate() {
            let row = &self.table[(j * BYTE_VALUES + b as usize) * self.kernels..][..self.kernels];
            for (o, r) in out.iter_mut().zip(row) {
                *o += r;
            }
        }
    }

    /// Full pre-activation map, `output_len x kernels`. Requires `bytes.len() >= window`.
    pub fn forward(&self, bytes: &[u8]) -> Tensor2D {
        let len = self.output_len(bytes.len());
        let mut values = vec![0.0; len * self.kernels];
        for (t, out) in values.chunks_exact_mut(self.kernels).enumerate() {
            self.accumulate(bytes, t, out);
        }
        Tensor2D::from_raw(len, self.kernels, values)
    }

    /// Per-kernel maximum of the pre-activation map and its first position,
    /// without materialising the map.
    pub fn max_over_positions(&self, bytes: &[u8]) -> (Vec<f64>, Vec<usize>) {
        let len = self.output_len(bytes.len());
        let mut best = vec![f64::NEG_INFINITY; self.kernels];
        let mut argmax = vec![0usize; self.kernels];
        let mut row = vec![0.0; self.kernels];
        for t in 0..len {
            self.accumulate(bytes, t, &mut row);
            for (k, &v) in row.iter().enumerate() {
                if v > best[k] {
                    best[k] = v;
                    argmax[k] = t;
                }
            }
        }
        (best, argmax)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_embed_then_conv() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let emb = Embedding::new(4, (0..4 * 256).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let conv = Conv1d::new(
            5,
            3,
            4,
            6,
            (0..6 * 20).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let bytes: Vec<u8> = (0..97).map(|_| rng.gen()).collect();
        let fused = FusedEmbedConv::new(&emb, &conv);
        let reference = conv.forward(&emb.forward(&bytes)).unwrap();
        let fast = fused.forward(&bytes);
        assert_eq!(fast.rows(), reference.rows());
        for (a, b) in fast.values().iter().zip(reference.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let (max, argmax) = fused.max_over_positions(&bytes);
        let pooled = crate::layers::global_max_pool(&fast).unwrap();
        assert_eq!(max, pooled.values);
        assert_eq!(argmax, pooled.argmax);
    }
}
