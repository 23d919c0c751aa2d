//! Brute-force reference implementations.

use pdfcnn::metrics::ScoredSample;

/// `out[t][k] = bias[k] + Σ_w Σ_c x[t·stride + w][c] · W[k][w][c]`.
pub fn conv_triple_loop(
    x: &[Vec<f64>],
    weights: &[Vec<Vec<f64>>],
    bias: &[f64],
    stride: usize,
) -> Vec<Vec<f64>> {
    let window = weights[0].len();
    let mut out = Vec::new();
    let mut start = 0;
    while start + window <= x.len() {
        let mut row = Vec::new();
        for (k, kernel) in weights.iter().enumerate() {
            let mut acc = bias[k];
            for (w, taps) in kernel.iter().enumerate() {
                for (c, tap) in taps.iter().enumerate() {
                    acc += x[start + w][c] * tap;
                }
            }
            row.push(acc);
        }
        out.push(row);
        start += stride;
    }
    out
}

/// Exhaustive sweep: every distinct score and +∞ as a threshold with the
/// `score >= threshold` rule; keeps the best detection whose FPR fits the
/// budget, preferring the smaller threshold on ties.
pub fn sweep_detection(samples: &[ScoredSample], budget: f64) -> (f64, f64) {
    let mut thresholds: Vec<f64> = samples.iter().map(|s| s.score).collect();
    thresholds.push(f64::INFINITY);
    let mal = samples.iter().filter(|s| s.label.is_malicious()).count() as f64;
    let ben = samples.len() as f64 - mal;
    let mut best = (f64::NEG_INFINITY, f64::INFINITY);
    for &t in &thresholds {
        let tp = samples.iter().filter(|s| s.label.is_malicious() && s.score >= t).count() as f64;
        let fp = samples.iter().filter(|s| !s.label.is_malicious() && s.score >= t).count() as f64;
        if fp / ben > budget {
            continue;
        }
        let d = tp / mal;
        if d > best.0 || (d == best.0 && t < best.1) {
            best = (d, t);
        }
    }
    best
}

/// Probability that a random malicious sample outscores a random benign
/// one, ties counting one half.
pub fn rank_auc(samples: &[ScoredSample]) -> f64 {
    let mal: Vec<f64> = samples.iter().filter(|s| s.label.is_malicious()).map(|s| s.score).collect();
    let ben: Vec<f64> = samples.iter().filter(|s| !s.label.is_malicious()).map(|s| s.score).collect();
    let mut wins = 0.0;
    for m in &mal {
        for b in &ben {
            wins += if m > b {
                1.0
            } else if m == b {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / (mal.len() * ben.len()) as f64
}

/// Prim's algorithm scanning every tree/non-tree pair at each step.
/// Returns the edge weights sorted ascending, which every MST shares.
pub fn brute_force_mst_weights(w: &[f64], n: usize) -> Vec<f64> {
    let mut in_tree = vec![false; n];
    in_tree[0] = true;
    let mut weights = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let mut best = f64::INFINITY;
        let mut pick = usize::MAX;
        for i in (0..n).filter(|&i| in_tree[i]) {
            for j in (0..n).filter(|&j| !in_tree[j]) {
                if w[i * n + j] < best {
                    best = w[i * n + j];
                    pick = j;
                }
            }
        }
        in_tree[pick] = true;
        weights.push(best);
    }
    weights.sort_by(f64::total_cmp);
    weights
}

/// Mutual-reachability matrix from scratch: sorted neighbour distances,
/// the point itself first.
pub fn brute_force_mutual_reachability(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    let n = rows.len();
    let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let core: Vec<f64> = (0..n)
        .map(|i| {
            let mut ds: Vec<f64> = (0..n).map(|j| d(&rows[i], &rows[j])).collect();
            ds.sort_by(f64::total_cmp);
            ds[k - 1]
        })
        .collect();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out[i * n + j] = d(&rows[i], &rows[j]).max(core[i]).max(core[j]);
            }
        }
    }
    out
}

/// Parameter count by walking layer shapes: embedding, convs (+BN affine),
/// optional hidden dense (+BN affine), scalar head.
pub fn parameter_count(
    embed_dim: usize,
    convs: &[(usize, usize, usize)],
    hidden: Option<usize>,
    batch_norm: bool,
) -> usize {
    let mut total = embed_dim * 256;
    let mut channels = embed_dim;
    for &(window, _stride, kernels) in convs {
        total += window * channels * kernels + kernels;
        if batch_norm {
            total += 2 * kernels;
        }
        channels = kernels;
    }
    if let Some(h) = hidden {
        total += channels * h + h;
        if batch_norm {
            total += 2 * h;
        }
        channels = h;
    }
    total + channels + 1
}
