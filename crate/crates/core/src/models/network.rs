use std::borrow::Cow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ArchSpec, ArchitectureId, FusedEmbedConv, ModelError};
use crate::corpus::ByteSequence;
use crate::layers::{
    dropout, global_max_pool, global_max_pool_backward, relu, relu_backward, relu_in_place, sigmoid,
    softplus, BatchNorm, BatchNormCache, Conv1d, Dense, Embedding, Mode, Tensor2D, BYTE_VALUES,
};
use crate::seed::{self, Component};

/// Lowest and highest score [`Scorer::score`] reports, so scores stay inside (0, 1).
const SCORE_FLOOR: f64 = f64::MIN_POSITIVE;
const SCORE_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;

/// One network instance: parameters plus batch-norm running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: ArchSpec,
    embedding: Embedding,
    convs: Vec<Conv1d>,
    conv_norms: Vec<BatchNorm>,
    hidden: Option<Dense>,
    hidden_norm: Option<BatchNorm>,
    head: Dense,
}

/// Parameter gradients, one vector per block of [`ArchSpec::parameter_blocks`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub blocks: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients {
            blocks: net.parameters().iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().flatten().all(|v| v.is_finite())
    }
}

/// Block indices of each layer inside [`Gradients::blocks`].
struct Layout {
    /// index of conv weight; bias is +1, bn gamma +2, bn beta +3
    convs: Vec<usize>,
    hidden: Option<usize>,
    head: usize,
}

impl Layout {
    fn new(spec: &ArchSpec) -> Self {
        let per_conv = if spec.uses_batch_norm() { 4 } else { 2 };
        let convs: Vec<usize> = (0..spec.convs.len()).map(|i| 1 + i * per_conv).collect();
        let after = 1 + spec.convs.len() * per_conv;
        let (hidden, head) = if spec.has_hidden() {
            (Some(after), after + if spec.uses_batch_norm() { 4 } else { 2 })
        } else {
            (None, after)
        };
        Layout { convs, hidden, head }
    }
}

/// Result of one eval-mode forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    /// Global max pool output (post-ReLU), before any dense layer.
    pub features: Vec<f64>,
    /// Position of each feature's maximum in the last activation map.
    pub argmax: Vec<usize>,
    pub logit: f64,
    pub score: f64,
}

fn he_uniform(rng: &mut ChaCha8Rng, fan_in: usize, n: usize) -> Vec<f64> {
    let bound = (6.0 / fan_in as f64).sqrt();
    (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
}

impl Network {
    /// Seeded initialisation: embedding uniform in [-0.05, 0.05], He-uniform
    /// conv and dense weights, zero biases, identity batch norm.
    pub fn build(spec: ArchSpec, seed: u64) -> Result<Self, ModelError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, Component::Init, 0));
        let embedding = Embedding::new(
            spec.embed_dim,
            (0..spec.embed_dim * BYTE_VALUES).map(|_| rng.gen_range(-0.05..0.05)).collect(),
        )?;
        let mut convs = Vec::with_capacity(spec.convs.len());
        let mut in_ch = spec.embed_dim;
        for g in &spec.convs {
            let fan_in = g.window * in_ch;
            convs.push(Conv1d::new(
                g.window,
                g.stride,
                in_ch,
                g.kernels,
                he_uniform(&mut rng, fan_in, g.kernels * fan_in),
                vec![0.0; g.kernels],
            )?);
            in_ch = g.kernels;
        }
        let d = spec.feature_width();
        let conv_norms = if spec.uses_batch_norm() {
            spec.convs.iter().map(|g| BatchNorm::new(g.kernels)).collect()
        } else {
            Vec::new()
        };
        let hidden = if spec.has_hidden() {
            Some(Dense::new(d, d, he_uniform(&mut rng, d, d * d), vec![0.0; d])?)
        } else {
            None
        };
        let hidden_norm = spec.uses_batch_norm().then(|| BatchNorm::new(d));
        let head = Dense::new(d, 1, he_uniform(&mut rng, d, d), vec![0.0])?;
        Ok(Network {
            spec,
            embedding,
            convs,
            conv_norms,
            hidden,
            hidden_norm,
            head,
        })
    }

    pub fn spec(&self) -> &ArchSpec {
        &self.spec
    }

    pub fn arch(&self) -> ArchitectureId {
        self.spec.arch
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn convs(&self) -> &[Conv1d] {
        &self.convs
    }

    pub fn hidden(&self) -> Option<&Dense> {
        self.hidden.as_ref()
    }

    pub fn head(&self) -> &Dense {
        &self.head
    }

    /// Trainable tensors in [`ArchSpec::parameter_blocks`] order.
    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.embedding.weights];
        let mut norms = self.conv_norms.iter();
        for c in &self.convs {
            out.push(&c.weights);
            out.push(&c.bias);
            if let Some(n) = norms.next() {
                out.push(&n.gamma);
                out.push(&n.beta);
            }
        }
        if let Some(h) = &self.hidden {
            out.push(&h.weights);
            out.push(&h.bias);
        }
        if let Some(n) = &self.hidden_norm {
            out.push(&n.gamma);
            out.push(&n.beta);
        }
        out.push(&self.head.weights);
        out.push(&self.head.bias);
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let Network {
            embedding,
            convs,
            conv_norms,
            hidden,
            hidden_norm,
            head,
            ..
        } = self;
        let mut out: Vec<&mut Vec<f64>> = vec![&mut embedding.weights];
        let mut norms = conv_norms.iter_mut();
        for c in convs.iter_mut() {
            out.push(&mut c.weights);
            out.push(&mut c.bias);
            if let Some(n) = norms.next() {
                out.push(&mut n.gamma);
                out.push(&mut n.beta);
            }
        }
        if let Some(h) = hidden {
            out.push(&mut h.weights);
            out.push(&mut h.bias);
        }
        if let Some(n) = hidden_norm {
            out.push(&mut n.gamma);
            out.push(&mut n.beta);
        }
        out.push(&mut head.weights);
        out.push(&mut head.bias);
        out
    }

    /// Batch-norm running statistics in [`ArchSpec::buffer_blocks`] order.
    pub fn buffers(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for n in self.conv_norms.iter().chain(&self.hidden_norm) {
            out.push(&n.running_mean);
            out.push(&n.running_var);
        }
        out
    }

    pub fn buffers_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let Network {
            conv_norms,
            hidden_norm,
            ..
        } = self;
        let mut out: Vec<&mut Vec<f64>> = Vec::new();
        for n in conv_norms.iter_mut().chain(hidden_norm.iter_mut()) {
            out.push(&mut n.running_mean);
            out.push(&mut n.running_var);
        }
        out
    }

    pub fn scorer(&self) -> Scorer<'_> {
        Scorer {
            net: self,
            fused: Cow::Owned(FusedEmbedConv::new(&self.embedding, &self.convs[0])),
        }
    }

    /// Scorer reusing a fused first layer previously built from this network.
    pub fn scorer_with<'a>(&'a self, fused: &'a FusedEmbedConv) -> Scorer<'a> {
        Scorer {
            net: self,
            fused: Cow::Borrowed(fused),
        }
    }

    pub fn score(&self, seq: &ByteSequence) -> Result<f64, ModelError> {
        self.scorer().score(seq)
    }

    pub fn features(&self, seq: &ByteSequence) -> Result<Vec<f64>, ModelError> {
        Ok(self.scorer().forward(seq.data())?.features)
    }

    fn check_len(&self, bytes: &[u8]) -> Result<(), ModelError> {
        if bytes.len() != self.spec.input_len {
            return Err(ModelError::InputLength {
                expected: self.spec.input_len,
                found: bytes.len(),
            });
        }
        Ok(())
    }

    fn head_eval(&self, features: &[f64]) -> Result<f64, ModelError> {
        let logit = match &self.hidden {
            Some(hidden) => {
                let mut u = hidden.forward(features)?;
                if let Some(bn) = &self.hidden_norm {
                    u = bn.forward_eval(&Tensor2D::from_raw(1, u.len(), u))?.into_values();
                }
                relu_in_place(&mut u);
                self.head.forward(&u)?[0]
            }
            None => self.head.forward(features)?[0],
        };
        Ok(logit)
    }

    /// Mean weighted binary cross-entropy over the batch and its gradients.
    ///
    /// Train-mode semantics: dropout is active (masks seeded from
    /// `dropout_seed` and the sample index) and batch norm uses batch
    /// statistics and updates its running averages.
    pub fn loss_and_gradients(
        &mut self,
        inputs: &[&[u8]],
        targets: &[f64],
        weights: Option<&[f64]>,
        dropout_seed: u64,
    ) -> Result<(f64, Gradients), ModelError> {
        if self.spec.uses_batch_norm() {
            self.loss_and_gradients_layerwise(inputs, targets, weights, dropout_seed)
        } else {
            self.loss_and_gradients_fused(inputs, targets, weights, dropout_seed)
        }
    }

    fn check_batch(&self, inputs: &[&[u8]], targets: &[f64], weights: Option<&[f64]>) -> Result<(), ModelError> {
        if inputs.is_empty() || inputs.len() != targets.len() || weights.is_some_and(|w| w.len() != inputs.len()) {
            return Err(ModelError::InvalidSpec(format!(
                "batch of {} inputs with {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        inputs.iter().try_for_each(|b| self.check_len(b))
    }

    /// Per-sample training path for single-conv networks without batch norm
    /// (A and B). Gradients through the max pool only reach one position per
    /// kernel, so the conv and embedding gradients are computed sparsely.
    fn loss_and_gradients_fused(
        &mut self,
        inputs: &[&[u8]],
        targets: &[f64],
        weights: Option<&[f64]>,
        dropout_seed: u64,
    ) -> Result<(f64, Gradients), ModelError> {
        self.check_batch(inputs, targets, weights)?;
        let fused = FusedEmbedConv::new(&self.embedding, &self.convs[0]);
        let scale = 1.0 / inputs.len() as f64;
        let this = &*self;
        let per_sample: Vec<Result<(f64, Gradients), ModelError>> = inputs
            .par_iter()
            .enumerate()
            .map(|(i, bytes)| {
                let w = weights.map_or(1.0, |w| w[i]);
                let mask_seed = seed::mix(&[dropout_seed, i as u64]);
                this.sample_fused(&fused, bytes, targets[i], w, scale, mask_seed)
            })
            .collect();
        let mut total = Gradients::zeros_like(self);
        let mut loss = 0.0;
        for r in per_sample {
            let (l, g) = r?;
            loss += l;
            total.add_assign(&g);
        }
        let loss = loss * scale;
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss);
        }
        Ok((loss, total))
    }

    fn sample_fused(
        &self,
        fused: &FusedEmbedConv,
        bytes: &[u8],
        target: f64,
        weight: f64,
        scale: f64,
        mask_seed: u64,
    ) -> Result<(f64, Gradients), ModelError> {
        let layout = Layout::new(&self.spec);
        let mut grads = Gradients::zeros_like(self);
        let (max, argmax) = fused.max_over_positions(bytes);
        let features: Vec<f64> = max.iter().map(|&m| m.max(0.0)).collect();

        let (top, hidden_cache) = match &self.hidden {
            Some(hidden) => {
                let u = hidden.forward(&features)?;
                let mut r = u.clone();
                relu_in_place(&mut r);
                let (d, mask) = dropout(&r, self.spec.dropout, Mode::Train, mask_seed)?;
                (d, Some((u, mask)))
            }
            None => (features.clone(), None),
        };
        let s = self.head.forward(&top)?[0];
        let loss = weight * (softplus(s) - target * s);
        let ds = scale * weight * (sigmoid(s) - target);

        let head_g = self.head.backward(&top, &[ds])?;
        grads.blocks[layout.head] = head_g.weights;
        grads.blocks[layout.head + 1] = head_g.bias;
        let d_features = match (&self.hidden, hidden_cache, layout.hidden) {
            (Some(hidden), Some((u, mask)), Some(hi)) => {
                let du: Vec<f64> = head_g
                    .input
                    .iter()
                    .zip(&mask)
                    .zip(&u)
                    .map(|((g, m), &uv)| if uv > 0.0 { g * m } else { 0.0 })
                    .collect();
                let hg = hidden.backward(&features, &du)?;
                grads.blocks[hi] = hg.weights;
                grads.blocks[hi + 1] = hg.bias;
                hg.input
            }
            _ => head_g.input,
        };

        let conv = &self.convs[0];
        let dim = self.spec.embed_dim;
        let fan_in = conv.fan_in();
        let ci = layout.convs[0];
        let (before, rest) = grads.blocks.split_at_mut(ci);
        let emb_grad = &mut before[0];
        let (conv_w, rest) = rest.split_first_mut().expect("conv weight block");
        let conv_b = &mut rest[0];
        for (k, &g) in d_features.iter().enumerate() {
            if max[k] <= 0.0 || g == 0.0 {
                continue;
            }
            conv_b[k] += g;
            let start = argmax[k] * conv.stride;
            let kernel = conv.kernel(k);
            let kw = &mut conv_w[k * fan_in..(k + 1) * fan_in];
            for (j, &b) in bytes[start..start + conv.window].iter().enumerate() {
                for c in 0..dim {
                    let e = c * BYTE_VALUES + b as usize;
                    kw[j * dim + c] += g * self.embedding.weights[e];
                    emb_grad[e] += g * kernel[j * dim + c];
                }
            }
        }
        Ok((loss, grads))
    }

    /// Reference training path: materialises every layer's activations for the
    /// whole batch and back-propagates through each layer's own backward.
    /// Works for every architecture; the only path for batch-norm networks.
    pub fn loss_and_gradients_layerwise(
        &mut self,
        inputs: &[&[u8]],
        targets: &[f64],
        weights: Option<&[f64]>,
        dropout_seed: u64,
    ) -> Result<(f64, Gradients), ModelError> {
        self.check_batch(inputs, targets, weights)?;
        let n = inputs.len();
        let scale = 1.0 / n as f64;
        let layout = Layout::new(&self.spec);
        let mut grads = Gradients::zeros_like(self);

        // forward
        let embedded: Vec<Tensor2D> = inputs.par_iter().map(|b| self.embedding.forward(b)).collect();
        let mut layer_inputs: Vec<Vec<Tensor2D>> = Vec::with_capacity(self.convs.len());
        let mut pre_relu: Vec<Vec<Tensor2D>> = Vec::with_capacity(self.convs.len());
        let mut bn_caches: Vec<BatchNormCache> = Vec::new();
        let mut current = embedded;
        for l in 0..self.convs.len() {
            let conv = &self.convs[l];
            let z: Vec<Tensor2D> = current.par_iter().map(|x| conv.forward(x)).collect::<Result<_, _>>()?;
            let z = match self.conv_norms.get_mut(l) {
                Some(bn) => {
                    let (out, cache) = bn.forward_train(&z)?;
                    bn_caches.push(cache);
                    out
                }
                None => z,
            };
            let activated: Vec<Tensor2D> = z.iter().map(relu).collect();
            layer_inputs.push(current);
            pre_relu.push(z);
            current = activated;
        }
        let pooled: Vec<_> = current.iter().map(global_max_pool).collect::<Result<Vec<_>, _>>()?;
        let last_rows = current[0].rows();
        let features: Vec<Vec<f64>> = pooled.iter().map(|p| p.values.clone()).collect();

        let mut hidden_pre: Vec<Tensor2D> = Vec::new();
        let mut hidden_bn_cache = None;
        let mut masks: Vec<Vec<f64>> = Vec::new();
        let top: Vec<Vec<f64>> = match &self.hidden {
            Some(hidden) => {
                let u: Vec<Tensor2D> = features
                    .iter()
                    .map(|f| hidden.forward(f).map(|u| Tensor2D::from_raw(1, u.len(), u)))
                    .collect::<Result<_, _>>()?;
                let un = match &mut self.hidden_norm {
                    Some(bn) => {
                        let (out, cache) = bn.forward_train(&u)?;
                        hidden_bn_cache = Some(cache);
                        out
                    }
                    None => u,
                };
                let mut top = Vec::with_capacity(n);
                for (i, t) in un.iter().enumerate() {
                    let mut r = t.values().to_vec();
                    relu_in_place(&mut r);
                    let (d, mask) = dropout(&r, self.spec.dropout, Mode::Train, seed::mix(&[dropout_seed, i as u64]))?;
                    masks.push(mask);
                    top.push(d);
                }
                hidden_pre = un;
                top
            }
            None => features.clone(),
        };
        let mut loss = 0.0;
        let mut d_top = Vec::with_capacity(n);
        for i in 0..n {
            let s = self.head.forward(&top[i])?[0];
            let w = weights.map_or(1.0, |w| w[i]);
            loss += w * (softplus(s) - targets[i] * s);
            let ds = scale * w * (sigmoid(s) - targets[i]);
            let hg = self.head.backward(&top[i], &[ds])?;
            accumulate(&mut grads.blocks[layout.head], &hg.weights);
            accumulate(&mut grads.blocks[layout.head + 1], &hg.bias);
            d_top.push(hg.input);
        }
        let loss = loss * scale;
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss);
        }

        // backward
        let d_features: Vec<Vec<f64>> = match (&self.hidden, layout.hidden) {
            (Some(hidden), Some(hi)) => {
                let d_un: Vec<Tensor2D> = (0..n)
                    .map(|i| {
                        let v = d_top[i]
                            .iter()
                            .zip(&masks[i])
                            .zip(hidden_pre[i].values())
                            .map(|((g, m), &p)| if p > 0.0 { g * m } else { 0.0 })
                            .collect::<Vec<f64>>();
                        Tensor2D::from_raw(1, v.len(), v)
                    })
                    .collect();
                let d_u = match (&self.hidden_norm, &hidden_bn_cache) {
                    (Some(bn), Some(cache)) => {
                        let g = bn.backward(cache, &d_un)?;
                        accumulate(&mut grads.blocks[hi + 2], &g.gamma);
                        accumulate(&mut grads.blocks[hi + 3], &g.beta);
                        g.inputs
                    }
                    _ => d_un,
                };
                let mut out = Vec::with_capacity(n);
                for i in 0..n {
                    let g = hidden.backward(&features[i], d_u[i].values())?;
                    accumulate(&mut grads.blocks[hi], &g.weights);
                    accumulate(&mut grads.blocks[hi + 1], &g.bias);
                    out.push(g.input);
                }
                out
            }
            _ => d_top,
        };
        let mut upstream: Vec<Tensor2D> = pooled
            .iter()
            .zip(&d_features)
            .map(|(p, g)| global_max_pool_backward(p, last_rows, g))
            .collect::<Result<_, _>>()?;
        for l in (0..self.convs.len()).rev() {
            let d_pre: Vec<Tensor2D> = pre_relu[l]
                .iter()
                .zip(&upstream)
                .map(|(z, g)| relu_backward(z, g))
                .collect::<Result<_, _>>()?;
            let ci = layout.convs[l];
            let d_z = match self.conv_norms.get(l) {
                Some(bn) => {
                    let g = bn.backward(&bn_caches[l], &d_pre)?;
                    accumulate(&mut grads.blocks[ci + 2], &g.gamma);
                    accumulate(&mut grads.blocks[ci + 3], &g.beta);
                    g.inputs
                }
                None => d_pre,
            };
            let conv = &self.convs[l];
            let per_sample: Vec<_> = layer_inputs[l]
                .par_iter()
                .zip(d_z.par_iter())
                .map(|(x, g)| conv.backward(x, g))
                .collect::<Result<_, _>>()?;
            upstream = Vec::with_capacity(n);
            for g in per_sample {
                accumulate(&mut grads.blocks[ci], &g.weights);
                accumulate(&mut grads.blocks[ci + 1], &g.bias);
                upstream.push(g.input);
            }
        }
        for (bytes, g) in inputs.iter().zip(&upstream) {
            self.embedding.backward(bytes, g, &mut grads.blocks[0])?;
        }
        Ok((loss, grads))
    }

    /// Train-mode loss without touching `self` (batch-norm statistics are
    /// updated on a scratch copy).
    pub fn batch_loss(
        &self,
        inputs: &[&[u8]],
        targets: &[f64],
        weights: Option<&[f64]>,
        dropout_seed: u64,
    ) -> Result<f64, ModelError> {
        let mut scratch = self.clone();
        Ok(scratch.loss_and_gradients(inputs, targets, weights, dropout_seed)?.0)
    }

    pub(crate) fn from_parts(
        spec: ArchSpec,
        params: Vec<Vec<f64>>,
        buffers: Vec<Vec<f64>>,
    ) -> Result<Self, ModelError> {
        let mut net = Network::build(spec, 0)?;
        for (dst, src) in net.parameters_mut().into_iter().zip(params) {
            *dst = src;
        }
        for (dst, src) in net.buffers_mut().into_iter().zip(buffers) {
            *dst = src;
        }
        Ok(net)
    }
}

fn accumulate(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Eval-mode forward passes with the first convolution pre-fused into the
/// embedding. Build once per parameter state and reuse across inputs.
pub struct Scorer<'a> {
    net: &'a Network,
    fused: Cow<'a, FusedEmbedConv>,
}

impl Scorer<'_> {
    pub fn network(&self) -> &Network {
        self.net
    }

    pub fn forward(&self, bytes: &[u8]) -> Result<Forward, ModelError> {
        let net = self.net;
        net.check_len(bytes)?;
        let (features, argmax) = if net.convs.len() == 1 && net.conv_norms.is_empty() {
            let (max, argmax) = self.fused.max_over_positions(bytes);
            // A non-positive maximum means the ReLU'd map is all zeros, whose
            // first maximum is position 0.
            let argmax = max.iter().zip(argmax).map(|(&m, t)| if m > 0.0 { t } else { 0 }).collect();
            (max.into_iter().map(|m| m.max(0.0)).collect(), argmax)
        } else {
            let mut x = self.fused.forward(bytes);
            for l in 0..net.convs.len() {
                if l > 0 {
                    x = net.convs[l].forward(&x)?;
                }
                if let Some(bn) = net.conv_norms.get(l) {
                    x = bn.forward_eval(&x)?;
                }
                relu_in_place(x.values_mut());
            }
            let pooled = global_max_pool(&x)?;
            (pooled.values, pooled.argmax)
        };
        let logit = net.head_eval(&features)?;
        Ok(Forward {
            features,
            argmax,
            logit,
            score: sigmoid(logit).clamp(SCORE_FLOOR, SCORE_CEIL),
        })
    }

    pub fn score(&self, seq: &ByteSequence) -> Result<f64, ModelError> {
        Ok(self.forward(seq.data())?.score)
    }

    /// Scores many inputs in parallel; output order matches input order.
    pub fn score_all<'s, I>(&self, seqs: I) -> Result<Vec<f64>, ModelError>
    where
        I: IntoParallelIterator<Item = &'s ByteSequence>,
        I::Iter: IndexedParallelIterator,
    {
        seqs.into_par_iter().map(|s| self.score(s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ArchitectureId::{A, B, C};

    fn random_bytes(seed: u64, n: usize) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen()).collect()
    }

    #[test]
    fn zero_head_scores_one_half() {
        for arch in [A, B, C] {
            let mut net = Network::build(ArchSpec::miniature(arch), 3).unwrap();
            let params = net.parameters_mut();
            let n = params.len();
            for p in params.into_iter().skip(n - 2) {
                p.iter_mut().for_each(|v| *v = 0.0);
            }
            let seq = ByteSequence::from_bytes(&random_bytes(1, 256), 256);
            assert_eq!(net.score(&seq).unwrap(), 0.5);
        }
    }

    #[test]
    fn scores_are_deterministic_and_in_range() {
        for arch in [A, B, C] {
            let net = Network::build(ArchSpec::miniature(arch), 5).unwrap();
            let seq = ByteSequence::from_bytes(&random_bytes(2, 300), 256);
            let a = net.score(&seq).unwrap();
            let b = Network::build(ArchSpec::miniature(arch), 5).unwrap().score(&seq).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
            assert!(a > 0.0 && a < 1.0);
        }
    }

    #[test]
    fn wrong_input_length_is_rejected() {
        let net = Network::build(ArchSpec::miniature(A), 0).unwrap();
        let seq = ByteSequence::from_bytes(b"abc", 100);
        assert!(matches!(net.score(&seq), Err(ModelError::InputLength { expected: 256, found: 100 })));
    }

    #[test]
    fn fused_and_layerwise_gradients_agree() {
        for arch in [A, B] {
            let net = Network::build(ArchSpec::miniature(arch), 9).unwrap();
            let bytes: Vec<Vec<u8>> = (0..4).map(|i| random_bytes(10 + i, 256)).collect();
            let inputs: Vec<&[u8]> = bytes.iter().map(Vec::as_slice).collect();
            let targets = [1.0, 0.0, 1.0, 0.0];
            let (la, ga) = net.clone().loss_and_gradients(&inputs, &targets, None, 4).unwrap();
            let (lb, gb) = net.clone().loss_and_gradients_layerwise(&inputs, &targets, None, 4).unwrap();
            assert!((la - lb).abs() < 1e-12);
            for (a, b) in ga.blocks.iter().flatten().zip(gb.blocks.iter().flatten()) {
                assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn features_are_non_negative_and_match_pool_tap() {
        for arch in [A, B, C] {
            let net = Network::build(ArchSpec::miniature(arch), 2).unwrap();
            let bytes = random_bytes(7, 256);
            let fwd = net.scorer().forward(&bytes).unwrap();
            assert_eq!(fwd.features.len(), net.spec().feature_width());
            assert!(fwd.features.iter().all(|&v| v >= 0.0));
            assert_eq!(net.head_eval(&fwd.features).unwrap(), fwd.logit);
        }
    }

    #[test]
    fn block_counts_follow_spec() {
        for arch in [A, B, C] {
            let spec = ArchSpec::miniature(arch);
            let net = Network::build(spec.clone(), 0).unwrap();
            let shapes = spec.parameter_blocks();
            assert_eq!(net.parameters().len(), shapes.len());
            for (p, s) in net.parameters().iter().zip(&shapes) {
                assert_eq!(p.len(), s.len(), "{}", s.name);
            }
            assert_eq!(net.buffers().len(), spec.buffer_blocks().len());
        }
    }

    #[test]
    fn model_b_dropout_is_identity_in_eval_mode() {
        let with = Network::build(ArchSpec::miniature(B), 8).unwrap();
        let mut spec = ArchSpec::miniature(B);
        spec.dropout = 0.0;
        let mut without = Network::build(spec, 99).unwrap();
        for (dst, src) in without.parameters_mut().into_iter().zip(with.parameters()) {
            dst.copy_from_slice(src);
        }
        for seed in 0..20 {
            let seq = ByteSequence::from_bytes(&random_bytes(seed, 256), 256);
            assert_eq!(with.score(&seq).unwrap().to_bits(), without.score(&seq).unwrap().to_bits());
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]

        #[test]
        fn scores_stay_strictly_inside_unit_interval(seed in 0u64..1000, arch in 0usize..3, gain in 0u32..4) {
            let arch = [A, B, C][arch];
            let mut net = Network::build(ArchSpec::miniature(arch), seed).unwrap();
            // Large head weights saturate the sigmoid.
            let params = net.parameters_mut();
            let n = params.len();
            for p in params.into_iter().skip(n - 2) {
                p.iter_mut().for_each(|v| *v *= 10f64.powi(3 * gain as i32));
            }
            let seq = ByteSequence::from_bytes(&random_bytes(seed, 256), 256);
            let s = net.score(&seq).unwrap();
            proptest::prop_assert!(s > 0.0 && s < 1.0, "{}", s);
            let features = net.features(&seq).unwrap();
            let again = net.features(&seq).unwrap();
            proptest::prop_assert_eq!(features, again);
        }
    }
}
