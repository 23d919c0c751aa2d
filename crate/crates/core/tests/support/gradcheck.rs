//! Central finite-difference checks of every layer and of whole networks.

use pdfcnn::layers::{
    dropout, global_max_pool, global_max_pool_backward, relu, relu_backward, sigmoid, softplus, BatchNorm, Conv1d,
    Dense, Embedding, Mode, Tensor2D, BYTE_VALUES,
};
use pdfcnn::models::{ArchSpec, ArchitectureId, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::rel_error;

const H: f64 = 1e-6;

/// Worst relative error over the cases of one check.
#[derive(Debug, Clone, Copy)]
pub struct CheckSummary {
    pub cases: usize,
    pub worst: f64,
}

fn summarize(errors: impl IntoIterator<Item = f64>) -> CheckSummary {
    let mut cases = 0;
    let mut worst: f64 = 0.0;
    for e in errors {
        cases += 1;
        worst = worst.max(if e.is_nan() { f64::INFINITY } else { e });
    }
    CheckSummary { cases, worst }
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Values bounded away from zero so no ReLU kink lies within `H`.
fn off_zero_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let m: f64 = rng.gen_range(0.01..1.0);
            if rng.gen_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect()
}

/// Numeric gradient of `f` at `x` for every coordinate.
fn numeric(x: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + H;
            let up = f(&p);
            p[i] = x[i] - H;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * H)
        })
        .collect()
}

fn project(r: &[f64], y: &[f64]) -> f64 {
    r.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn embedding(cases: usize, seed: u64) -> CheckSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    summarize((0..cases).map(|_| {
        let dim = rng.gen_range(1..=4);
        let len = rng.gen_range(1..=24);
        let bytes: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let w = normal_vec(&mut rng, dim * BYTE_VALUES);
        let r = normal_vec(&mut rng, len * dim);
        let emb = Embedding::new(dim, w.clone()).unwrap();
        let mut analytic = vec![0.0; w.len()];
        emb.backward(&bytes, &Tensor2D::new(len, dim, r.clone()).unwrap(), &mut analytic)
            .unwrap();
        let num = numeric(&w, |w| project(&r, Embedding::new(dim, w.to_vec()).unwrap().forward(&bytes).values()));
        rel_error(&analytic, &num)
    }))
}

pub fn conv(cases: usize, seed: u64) -> CheckSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    summarize((0..cases).map(|_| {
        let (window, stride) = (rng.gen_range(1..=6), rng.gen_range(1..=4));
        let (cin, k) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let len = window + rng.gen_range(0..=16);
        let x = normal_vec(&mut rng, len * cin);
        let w = normal_vec(&mut rng, k * window * cin);
        let b = normal_vec(&mut rng, k);
        let layer = Conv1d::new(window, stride, cin, k, w.clone(), b.clone()).unwrap();
        let xt = Tensor2D::new(len, cin, x.clone()).unwrap();
        let out_len = layer.output_len(len).unwrap();
        let r = normal_vec(&mut rng, out_len * k);
        let g = layer.backward(&xt, &Tensor2D::new(out_len, k, r.clone()).unwrap()).unwrap();
        let f = |x: &[f64], w: &[f64], b: &[f64]| {
            let l = Conv1d::new(window, stride, cin, k, w.to_vec(), b.to_vec()).unwrap();
            project(&r, l.forward(&Tensor2D::new(len, cin, x.to_vec()).unwrap()).unwrap().values())
        };
        let nx = numeric(&x, |x| f(x, &w, &b));
        let nw = numeric(&w, |w| f(&x, w, &b));
        let nb = numeric(&b, |b| f(&x, &w, b));
        rel_error(g.input.values(), &nx)
            .max(rel_error(&g.weights, &nw))
            .max(rel_error(&g.bias, &nb))
    }))
}

pub fn relu_layer(cases: usize, seed: u64) -> CheckSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    summarize((0..cases).map(|_| {
        let (rows, cols) = (rng.gen_range(1..=10), rng.gen_range(1..=4));
        let x = off_zero_vec(&mut rng, rows * cols);
        let r = normal_vec(&mut rng, rows * cols);
        let xt = Tensor2D::new(rows, cols, x.clone()).unwrap();
        let analytic = relu_backward(&xt, &Tensor2D::new(rows, cols, r.clone()).unwrap()).unwrap();
        let num = numeric(&x, |x| project(&r, relu(&Tensor2D::new(rows, cols, x.to_vec()).unwrap()).values()));
        rel_error(analytic.values(), &num)
    }))
}

pub fn max_pool(cases: usize, seed: u64) -> CheckSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    summarize((0..cases).map(|_| {
        let (rows, cols) = (rng.gen_range(1..=12), rng.gen_range(1..=4));
        // A permutation of well-separated levels keeps every maximum unique.
        let mut levels: Vec<f64> = (0..rows * cols).map(|i| i as f64 * 0.01).collect();
        for i in (1..levels.len()).rev() {
            levels.swap(i, rng.gen_range(0..=i));
        }
        let r = normal_vec(&mut rng, cols);
        let pooled = global_max_pool(&Tensor2D::new(rows, cols, levels.clone()).unwrap()).unwrap();
        let analytic = global_max_pool_backward(&pooled, rows, &r).unwrap();
        let num = numeric(&levels, |x| {
            project(&r, &global_max_pool(&Tensor2D::new(rows, cols, x.to_vec()).unwrap()).unwrap().values)
        });
        rel_error(analytic.values(), &num)
    }))
}

pub fn dense(cases: usize, seed: u64) -> CheckSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    summarize((0..cases).map(|_| {
        let (ni, no) = (rng.gen_range(1..=10), rng.gen_range(1..=6));
        let v = normal_vec(&mut rng, ni);
        let w = normal_vec(&mut rng, ni * no);
        let b = normal_vec(&mut rng, no);
        let r = normal_vec(&mut rng, no);
        let g = Dense::new(ni, no, w.clone(), b.clone()).unwrap().backward(&v, &r).unwrap();
        let f = |v: &[f64], w: &[f64], b: &[f64]| project(&r, &Dense::new(ni, no, w.to_vec(), b.to_vec()).unwrap().forward(v).unwrap());
        rel_error(&g.input, &numeric(&v, |v| f(v, &w, &b)))
            .max(rel_error(&g.weights, &numeric(&w, |w| f(&v, w, &b))))
            .max(rel_error(&g.bias, &numeric(&b, |b| f(&v, &w, b))))
    }))
}

pub fn batch_norm(cases: usize, seed: u64) -> CheckSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    summarize((0..cases).map(|_| {
        let c = rng.gen_range(1..=4);
        let n = rng.gen_range(2..=4);
        let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=5)).collect();
        let total: usize = rows.iter().sum();
        let x = normal_vec(&mut rng, total * c);
        let gamma = normal_vec(&mut rng, c);
        let beta = normal_vec(&mut rng, c);
        let r = normal_vec(&mut rng, total * c);
        let split = |x: &[f64]| {
            let mut out = Vec::new();
            let mut at = 0;
            for &len in &rows {
                out.push(Tensor2D::new(len, c, x[at..at + len * c].to_vec()).unwrap());
                at += len * c;
            }
            out
        };
        let layer = |gamma: &[f64], beta: &[f64]| {
            let mut bn = BatchNorm::new(c);
            bn.gamma = gamma.to_vec();
            bn.beta = beta.to_vec();
            bn
        };
        let f = |x: &[f64], gamma: &[f64], beta: &[f64]| {
            let (out, _) = layer(gamma, beta).forward_train(&split(x)).unwrap();
            let flat: Vec<f64> = out.iter().flat_map(|t| t.values().to_vec()).collect();
            project(&r, &flat)
        };
        let mut bn = layer(&gamma, &beta);
        let (_, cache) = bn.forward_train(&split(&x)).unwrap();
        let g = layer(&gamma, &beta).backward(&cache, &split(&r)).unwrap();
        let gx: Vec<f64> = g.inputs.iter().flat_map(|t| t.values().to_vec()).collect();
        rel_error(&gx, &numeric(&x, |x| f(x, &gamma, &beta)))
            .max(rel_error(&g.gamma, &numeric(&gamma, |gm| f(&x, gm, &beta))))
            .max(rel_error(&g.beta, &numeric(&beta, |bt| f(&x, &gamma, bt))))
    }))
}

pub fn dropout_layer(cases: usize, seed: u64) -> CheckSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    summarize((0..cases).map(|_| {
        let n = rng.gen_range(1..=16);
        let p = rng.gen_range(0.05..0.6);
        let mask_seed: u64 = rng.gen();
        let v = normal_vec(&mut rng, n);
        let r = normal_vec(&mut rng, n);
        let (_, mask) = dropout(&v, p, Mode::Train, mask_seed).unwrap();
        let analytic: Vec<f64> = r.iter().zip(&mask).map(|(a, m)| a * m).collect();
        let num = numeric(&v, |v| project(&r, &dropout(v, p, Mode::Train, mask_seed).unwrap().0));
        rel_error(&analytic, &num)
    }))
}

/// The sigmoid output with weighted binary cross-entropy, as a function of the logit.
pub fn sigmoid_bce(cases: usize, seed: u64) -> CheckSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    summarize((0..cases).map(|_| {
        let s = rng.gen_range(-8.0..8.0);
        let t = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
        let w = rng.gen_range(0.1..3.0);
        let analytic = w * (sigmoid(s) - t);
        let num = numeric(&[s], |s| w * (softplus(s[0]) - t * s[0]));
        rel_error(&[analytic], &num)
    }))
}

/// Whole-network check on a miniature spec. Compares up to `per_block`
/// sampled coordinates of every parameter block; returns the worst block
/// error and the number of blocks.
pub fn whole_model(arch: ArchitectureId, layerwise: bool, per_block: usize, seed: u64) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = ArchSpec::miniature(arch);
    let net = Network::build(spec.clone(), seed).unwrap();
    let batch: Vec<Vec<u8>> = (0..4).map(|_| (0..spec.input_len).map(|_| rng.gen()).collect()).collect();
    let inputs: Vec<&[u8]> = batch.iter().map(Vec::as_slice).collect();
    let targets = [1.0, 0.0, 1.0, 0.0];
    let weights = [1.0, 0.5, 2.0, 1.0];
    let dropout_seed = seed ^ 0xD1;
    let grads = if layerwise {
        net.clone().loss_and_gradients_layerwise(&inputs, &targets, Some(&weights), dropout_seed)
    } else {
        net.clone().loss_and_gradients(&inputs, &targets, Some(&weights), dropout_seed)
    }
    .unwrap()
    .1;
    let loss = |n: &Network| n.batch_loss(&inputs, &targets, Some(&weights), dropout_seed).unwrap();
    let mut worst: f64 = 0.0;
    let n_blocks = grads.blocks.len();
    for (b, analytic_block) in grads.blocks.iter().enumerate() {
        let len = analytic_block.len();
        let coords: Vec<usize> = if len <= per_block {
            (0..len).collect()
        } else {
            (0..per_block).map(|_| rng.gen_range(0..len)).collect()
        };
        let mut analytic = Vec::new();
        let mut num = Vec::new();
        for &i in &coords {
            let mut up = net.clone();
            up.parameters_mut()[b][i] += H;
            let mut down = net.clone();
            down.parameters_mut()[b][i] -= H;
            analytic.push(analytic_block[i]);
            num.push((loss(&up) - loss(&down)) / (2.0 * H));
        }
        worst = worst.max(rel_error(&analytic, &num));
    }
    (worst, n_blocks)
}
