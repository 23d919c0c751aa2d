use nalgebra::{DMatrix, SymmetricEigen};

use super::ClusterError;

/// Eigenvalues below this fraction of the largest are treated as zero.
const RANK_TOL: f64 = 1e-10;

/// Top-two PCA of a row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// One `[x, y]` per input row.
    pub coords: Vec<[f64; 2]>,
    /// Unit loadings; an all-zero vector marks a degenerate component.
    pub components: [Vec<f64>; 2],
    /// Every covariance eigenvalue (n − 1 denominator), descending.
    pub eigenvalues: Vec<f64>,
    pub mean: Vec<f64>,
}

pub fn project_2d(rows: &[Vec<f64>]) -> Result<Projection, ClusterError> {
    let n = rows.len();
    if n < 2 {
        return Err(ClusterError::Config(format!("projection needs at least 2 rows, got {n}")));
    }
    let d = rows[0].len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(ClusterError::Config("rows must share a non-zero width".into()));
    }
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
    let cov = (centered.transpose() * &centered) / (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let top = eigenvalues[0];

    let component = |rank: usize| -> Vec<f64> {
        if rank >= d || top <= 0.0 || eigenvalues[rank] <= RANK_TOL * top {
            return vec![0.0; d];
        }
        let mut v: Vec<f64> = eig.eigenvectors.column(order[rank]).iter().copied().collect();
        let lead = v
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map_or(0.0, |(_, x)| x);
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    };
    let components = [component(0), component(1)];
    let coords = (0..n)
        .map(|i| {
            let row = centered.row(i);
            let dot = |c: &[f64]| row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
            [dot(&components[0]), dot(&components[1])]
        })
        .collect();
    Ok(Projection {
        coords,
        components,
        eigenvalues,
        mean,
    })
}
