use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BaselineError;
use crate::corpus::Label;
use crate::seed::{self, Component};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Draw a bootstrap resample per tree; off trains every tree on all rows.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 16,
            min_leaf: 1,
            bootstrap: true,
            seed: 0,
        }
    }
}

/// Flat tree node. Leaves have `feature == None`; internal nodes send
/// `x[feature] <= threshold` to `left`.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub feature: Option<usize>,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    /// Fraction of malicious training rows reaching this node.
    pub value: f64,
}

impl Node {
    fn leaf(value: f64) -> Self {
        Node {
            feature: None,
            threshold: 0.0,
            left: 0,
            right: 0,
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            let n = &self.nodes[i];
            match n.feature {
                None => return n.value,
                Some(f) => i = if x[f] <= n.threshold { n.left } else { n.right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            let n = &t.nodes[i];
            match n.feature {
                None => 0,
                Some(_) => 1 + walk(t, n.left).max(walk(t, n.right)),
            }
        }
        walk(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_features: usize,
    pub params: ForestParams,
    /// Set when the training labels had a single class.
    pub degenerate: bool,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    n_features: usize,
    mtry: usize,
    params: &'a ForestParams,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

impl Builder<'_> {
    fn build(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let pos = rows.iter().filter(|&&r| self.y[r]).count();
        let value = pos as f64 / rows.len() as f64;
        let id = self.nodes.len();
        self.nodes.push(Node::leaf(value));
        if pos == 0 || pos == rows.len() || depth >= self.params.max_depth || rows.len() < 2 * self.params.min_leaf {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(rows, pos) else {
            return id;
        };
        let mut split = 0;
        for i in 0..rows.len() {
            if self.x[rows[i]][feature] <= threshold {
                rows.swap(i, split);
                split += 1;
            }
        }
        let (l, r) = rows.split_at_mut(split);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = Node {
            feature: Some(feature),
            threshold,
            left,
            right,
            value,
        };
        id
    }

    /// Examines features in random order until `mtry` non-constant ones have
    /// been scored, so a node is only made a leaf when no feature separates it.
    fn best_split(&mut self, rows: &[usize], pos: usize) -> Option<(usize, f64)> {
        let mut features: Vec<usize> = (0..self.n_features).collect();
        features.shuffle(&mut self.rng);
        let n = rows.len();
        let parent = gini(pos, n);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut examined = 0;
        let mut column: Vec<(f64, bool)> = Vec::with_capacity(n);
        for f in features {
            if examined >= self.mtry {
                break;
            }
            column.clear();
            column.extend(rows.iter().map(|&r| (self.x[r][f], self.y[r])));
            column.sort_by(|a, b| a.0.total_cmp(&b.0));
            if column[0].0 == column[n - 1].0 {
                continue;
            }
            examined += 1;
            let mut left_pos = 0;
            for i in 0..n - 1 {
                left_pos += usize::from(column[i].1);
                if column[i].0 == column[i + 1].0 {
                    continue;
                }
                let nl = i + 1;
                let nr = n - nl;
                if nl < self.params.min_leaf || nr < self.params.min_leaf {
                    continue;
                }
                let impurity =
                    (nl as f64 * gini(left_pos, nl) + nr as f64 * gini(pos - left_pos, nr)) / n as f64;
                if impurity < parent && best.map_or(true, |b| impurity < b.0) {
                    let threshold = column[i].0 + (column[i + 1].0 - column[i].0) / 2.0;
                    best = Some((impurity, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Fits a random forest: Gini splits over √d randomly drawn features per node,
/// one bootstrap resample per tree, trees built in parallel.
pub fn forest_fit(x: &[Vec<f64>], labels: &[Label], params: &ForestParams) -> Result<ForestModel, BaselineError> {
    if x.is_empty() {
        return Err(BaselineError::Empty("forest training set"));
    }
    if x.len() != labels.len() {
        return Err(BaselineError::Config(format!("{} rows but {} labels", x.len(), labels.len())));
    }
    if params.n_trees == 0 || params.min_leaf == 0 {
        return Err(BaselineError::Config("n_trees and min_leaf must be positive".into()));
    }
    let n_features = x[0].len();
    if let Some(row) = x.iter().find(|r| r.len() != n_features) {
        return Err(BaselineError::Dimension {
            expected: n_features,
            found: row.len(),
        });
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(BaselineError::Config("non-finite feature value".into()));
    }
    let y: Vec<bool> = labels.iter().map(|l| l.is_malicious()).collect();
    let pos = y.iter().filter(|&&b| b).count();
    if pos == 0 || pos == y.len() {
        let value = if pos == 0 { 0.0 } else { 1.0 };
        return Ok(ForestModel {
            trees: vec![Tree { nodes: vec![Node::leaf(value)] }],
            n_features,
            params: params.clone(),
            degenerate: true,
        });
    }
    let mtry = ((n_features as f64).sqrt().floor() as usize).max(1);
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(params.seed, Component::Forest, t as u64));
            let mut rows: Vec<usize> = if params.bootstrap {
                (0..x.len()).map(|_| rng.gen_range(0..x.len())).collect()
            } else {
                (0..x.len()).collect()
            };
            let mut b = Builder {
                x,
                y: &y,
                n_features,
                mtry,
                params,
                rng,
                nodes: Vec::new(),
            };
            b.build(&mut rows, 0);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(ForestModel {
        trees,
        n_features,
        params: params.clone(),
        degenerate: false,
    })
}

/// Mean leaf probability over trees.
pub fn forest_score(model: &ForestModel, x: &[f64]) -> Result<f64, BaselineError> {
    if x.len() != model.n_features {
        return Err(BaselineError::Dimension {
            expected: model.n_features,
            found: x.len(),
        });
    }
    Ok(model.trees.iter().map(|t| t.predict(x)).sum::<f64>() / model.trees.len() as f64)
}
