use super::{shape_err, LayerError, Tensor2D};

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Per-channel batch normalisation.
///
/// In train mode the statistics are taken over every position of every
/// sample in the batch; running statistics move towards them with
/// `momentum`. Eval mode normalises with the running statistics only.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub epsilon: f64,
    pub momentum: f64,
}

/// What the backward pass needs from a train-mode forward.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    normalized: Vec<Tensor2D>,
    inv_std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormGradients {
    pub inputs: Vec<Tensor2D>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl BatchNorm {
    pub fn new(channels: usize) -> Self {
        BatchNorm {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            epsilon: BN_EPSILON,
            momentum: BN_MOMENTUM,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    fn check(&self, x: &Tensor2D) -> Result<(), LayerError> {
        if x.cols() != self.channels() {
            return Err(shape_err("batch_norm", self.channels(), x.cols()));
        }
        Ok(())
    }

    pub fn forward_eval(&self, x: &Tensor2D) -> Result<Tensor2D, LayerError> {
        self.check(x)?;
        let c = self.channels();
        let scale: Vec<f64> = (0..c)
            .map(|j| self.gamma[j] / (self.running_var[j] + self.epsilon).sqrt())
            .collect();
        let mut out = x.clone();
        for (i, v) in out.values_mut().iter_mut().enumerate() {
            let j = i % c;
            *v = (*v - self.running_mean[j]) * scale[j] + self.beta[j];
        }
        Ok(out)
    }

    pub fn forward_train(&mut self, batch: &[Tensor2D]) -> Result<(Vec<Tensor2D>, BatchNormCache), LayerError> {
        if batch.len() < 2 {
            return Err(LayerError::BatchTooSmall(batch.len()));
        }
        for x in batch {
            self.check(x)?;
        }
        let c = self.channels();
        let count: usize = batch.iter().map(Tensor2D::rows).sum();
        if count < 2 {
            return Err(LayerError::BatchTooSmall(count));
        }
        let mut mean = vec![0.0; c];
        for x in batch {
            for (i, v) in x.values().iter().enumerate() {
                mean[i % c] += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= count as f64);
        let mut var = vec![0.0; c];
        for x in batch {
            for (i, v) in x.values().iter().enumerate() {
                let d = v - mean[i % c];
                var[i % c] += d * d;
            }
        }
        var.iter_mut().for_each(|v| *v /= count as f64);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.epsilon).sqrt()).collect();

        let mut normalized = Vec::with_capacity(batch.len());
        let mut outputs = Vec::with_capacity(batch.len());
        for x in batch {
            let mut n = x.clone();
            let mut y = x.clone();
            for (i, (nv, yv)) in n.values_mut().iter_mut().zip(y.values_mut()).enumerate() {
                let j = i % c;
                *nv = (*nv - mean[j]) * inv_std[j];
                *yv = *nv * self.gamma[j] + self.beta[j];
            }
            normalized.push(n);
            outputs.push(y);
        }
        let unbias = count as f64 / (count as f64 - 1.0);
        for j in 0..c {
            self.running_mean[j] = (1.0 - self.momentum) * self.running_mean[j] + self.momentum * mean[j];
            self.running_var[j] = (1.0 - self.momentum) * self.running_var[j] + self.momentum * var[j] * unbias;
        }
        Ok((outputs, BatchNormCache { normalized, inv_std }))
    }

    pub fn backward(&self, cache: &BatchNormCache, upstream: &[Tensor2D]) -> Result<BatchNormGradients, LayerError> {
        if upstream.len() != cache.normalized.len() {
            return Err(shape_err("batch_norm", cache.normalized.len(), upstream.len()));
        }
        let c = self.channels();
        let mut gamma = vec![0.0; c];
        let mut beta = vec![0.0; c];
        // sums of dxhat and dxhat * xhat per channel
        let mut sum_d = vec![0.0; c];
        let mut sum_dx = vec![0.0; c];
        let mut count = 0usize;
        for (n, g) in cache.normalized.iter().zip(upstream) {
            if n.rows() != g.rows() || n.cols() != g.cols() {
                return Err(shape_err("batch_norm", format!("{}x{}", n.rows(), n.cols()), format!("{}x{}", g.rows(), g.cols())));
            }
            count += n.rows();
            for (i, (&xh, &dy)) in n.values().iter().zip(g.values()).enumerate() {
                let j = i % c;
                gamma[j] += dy * xh;
                beta[j] += dy;
                let d = dy * self.gamma[j];
                sum_d[j] += d;
                sum_dx[j] += d * xh;
            }
        }
        let m = count as f64;
        let inputs = cache
            .normalized
            .iter()
            .zip(upstream)
            .map(|(n, g)| {
                let values = n
                    .values()
                    .iter()
                    .zip(g.values())
                    .enumerate()
                    .map(|(i, (&xh, &dy))| {
                        let j = i % c;
                        let d = dy * self.gamma[j];
                        cache.inv_std[j] / m * (m * d - sum_d[j] - xh * sum_dx[j])
                    })
                    .collect();
                Tensor2D::from_raw(n.rows(), n.cols(), values)
            })
            .collect();
        Ok(BatchNormGradients { inputs, gamma, beta })
    }
}
