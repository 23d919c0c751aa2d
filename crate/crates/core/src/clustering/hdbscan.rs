//! HDBSCAN over Euclidean distances:
//!
//! 1. core distance = distance to the k-th nearest neighbour, counting the
//!    point itself as the first (k = min_cluster_size);
//! 2. mutual reachability = max(core_a, core_b, d(a, b));
//! 3. minimum spanning tree of the mutual-reachability graph (Prim, dense);
//! 4. single-linkage merge tree from the sorted MST edges;
//! 5. condensed tree: merges tied at one distance form a single multi-way
//!    split; it opens new clusters only when two or more parts hold at least
//!    min_cluster_size points, otherwise the small parts' points fall out of
//!    the parent;
//! 6. excess-of-mass selection over cluster stabilities.
//!
//! Splits at distance zero (duplicate points) never open clusters: the points
//! fall out at a capped λ, twice the largest finite λ in the tree. The root is
//! only selected when it has no child clusters, in which case every point
//! belongs to it.

use rayon::prelude::*;

use super::{ClusterAssignment, ClusterError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Row-major n × n Euclidean distance matrix.
pub fn pairwise_distances(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
        for (j, d) in row.iter_mut().enumerate() {
            *d = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
        }
    });
    out
}

/// Distance to the k-th nearest neighbour; the point itself is the first.
pub fn core_distances(dist: &[f64], n: usize, k: usize) -> Vec<f64> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = dist[i * n..(i + 1) * n].to_vec();
            let kth = k.clamp(1, n) - 1;
            *row.select_nth_unstable_by(kth, |a, b| a.total_cmp(b)).1
        })
        .collect()
}

pub fn mutual_reachability(dist: &[f64], core: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j { 0.0 } else { dist[i * n + j].max(core[i]).max(core[j]) };
        }
    });
    out
}

/// Prim's algorithm on a dense symmetric weight matrix. Edges come out in
/// the order vertices join the tree; ties pick the lowest vertex index.
pub fn prim_mst(weights: &[f64], n: usize) -> Vec<MstEdge> {
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let row = &weights[current * n..(current + 1) * n];
        let mut next = usize::MAX;
        let mut next_w = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            if row[j] < best[j] {
                best[j] = row[j];
                from[j] = current;
            }
            if next == usize::MAX || best[j] < next_w {
                next = j;
                next_w = best[j];
            }
        }
        in_tree[next] = true;
        edges.push(MstEdge {
            a: from[next],
            b: next,
            weight: next_w,
        });
        current = next;
    }
    edges
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// One merge of the single-linkage tree. Nodes `0..n` are points, node
/// `n + i` is the i-th merge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

pub fn single_linkage(mst: &[MstEdge], n: usize) -> Vec<Merge> {
    let mut edges = mst.to_vec();
    edges.sort_by(|x, y| x.weight.total_cmp(&y.weight).then((x.a, x.b).cmp(&(y.a, y.b))));
    let mut uf = UnionFind::new(2 * n);
    let mut size = vec![1usize; 2 * n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for e in edges {
        let (ra, rb) = (uf.find(e.a), uf.find(e.b));
        let node = n + merges.len();
        uf.parent[ra] = node;
        uf.parent[rb] = node;
        size[node] = size[ra] + size[rb];
        merges.push(Merge {
            left: ra,
            right: rb,
            distance: e.weight,
            size: size[node],
        });
    }
    merges
}

/// Member of a condensed-tree edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Child {
    Point(usize),
    Cluster(usize),
}

/// `child` leaves cluster `parent` at density `lambda` (1 / distance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondensedEdge {
    pub parent: usize,
    pub child: Child,
    pub lambda: f64,
    pub size: usize,
}

/// Condensed tree; cluster 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensedTree {
    pub edges: Vec<CondensedEdge>,
    pub n_clusters: usize,
}

fn leaves(merges: &[Merge], n: usize, node: usize, out: &mut Vec<usize>) {
    let mut stack = vec![node];
    while let Some(x) = stack.pop() {
        if x < n {
            out.push(x);
        } else {
            let m = &merges[x - n];
            stack.push(m.right);
            stack.push(m.left);
        }
    }
}

pub fn condense(merges: &[Merge], n: usize, min_cluster_size: usize) -> CondensedTree {
    let mut edges = Vec::new();
    if merges.is_empty() {
        return CondensedTree { edges, n_clusters: 1 };
    }
    let max_finite = merges
        .iter()
        .filter(|m| m.distance > 0.0)
        .map(|m| 1.0 / m.distance)
        .fold(0.0, f64::max);
    let cap = if max_finite > 0.0 { 2.0 * max_finite } else { 1.0 };
    let size_of = |node: usize| if node < n { 1 } else { merges[node - n].size };

    let mut n_clusters = 1;
    let mut stack = vec![(n + merges.len() - 1, 0usize)];
    let mut parts = Vec::new();
    let mut points = Vec::new();
    while let Some((node, cluster)) = stack.pop() {
        let distance = merges[node - n].distance;
        let lambda = if distance > 0.0 { 1.0 / distance } else { cap };
        // Merges tied at this distance split the cluster in one step.
        parts.clear();
        let mut open = vec![node];
        while let Some(x) = open.pop() {
            if x >= n && merges[x - n].distance == distance {
                open.push(merges[x - n].right);
                open.push(merges[x - n].left);
            } else {
                parts.push(x);
            }
        }
        let big = if distance > 0.0 {
            parts.iter().filter(|&&x| size_of(x) >= min_cluster_size).count()
        } else {
            0
        };
        for &child in &parts {
            let size = size_of(child);
            if big >= 2 && size >= min_cluster_size {
                let id = n_clusters;
                n_clusters += 1;
                edges.push(CondensedEdge {
                    parent: cluster,
                    child: Child::Cluster(id),
                    lambda,
                    size,
                });
                stack.push((child, id));
            } else if big == 1 && size >= min_cluster_size {
                // min_cluster_size >= 2, so this part is a merge node.
                stack.push((child, cluster));
            } else {
                points.clear();
                leaves(merges, n, child, &mut points);
                edges.extend(points.iter().map(|&p| CondensedEdge {
                    parent: cluster,
                    child: Child::Point(p),
                    lambda,
                    size: 1,
                }));
            }
        }
    }
    CondensedTree { edges, n_clusters }
}

/// Excess-of-mass selection. Returns the selected cluster ids of the
/// condensed tree and each cluster's stability.
pub fn select_clusters(tree: &CondensedTree) -> (Vec<usize>, Vec<f64>) {
    let k = tree.n_clusters;
    let mut birth = vec![0.0; k];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); k];
    for e in &tree.edges {
        if let Child::Cluster(c) = e.child {
            birth[c] = e.lambda;
            children[e.parent].push(c);
        }
    }
    let mut stability = vec![0.0; k];
    for e in &tree.edges {
        stability[e.parent] += (e.lambda - birth[e.parent]) * e.size as f64;
    }
    let raw = stability.clone();
    let mut selected = vec![false; k];
    // Children always carry larger ids than their parent.
    for c in (1..k).rev() {
        if children[c].is_empty() {
            selected[c] = true;
            continue;
        }
        let subtree: f64 = children[c].iter().map(|&ch| stability[ch]).sum();
        if subtree > stability[c] {
            stability[c] = subtree;
        } else {
            selected[c] = true;
            let mut stack = children[c].clone();
            while let Some(d) = stack.pop() {
                selected[d] = false;
                stack.extend(children[d].iter().copied());
            }
        }
    }
    if children[0].is_empty() {
        selected[0] = true;
    }
    ((0..k).filter(|&c| selected[c]).collect(), raw)
}

/// Full clustering output, with the intermediate MST exposed for checks.
#[derive(Debug, Clone)]
pub struct HdbscanResult {
    pub assignment: ClusterAssignment,
    pub core_distances: Vec<f64>,
    pub mst: Vec<MstEdge>,
    pub condensed: CondensedTree,
}

pub fn hdbscan(rows: &[Vec<f64>], min_cluster_size: usize) -> Result<HdbscanResult, ClusterError> {
    if min_cluster_size < 2 {
        return Err(ClusterError::Config(format!("min_cluster_size {min_cluster_size} below 2")));
    }
    let n = rows.len();
    if let Some(d) = rows.first().map(Vec::len) {
        if rows.iter().any(|r| r.len() != d) {
            return Err(ClusterError::Config("rows differ in width".into()));
        }
    }
    if n < min_cluster_size {
        return Ok(HdbscanResult {
            assignment: ClusterAssignment::from_labels(vec![None; n]),
            core_distances: Vec::new(),
            mst: Vec::new(),
            condensed: CondensedTree {
                edges: Vec::new(),
                n_clusters: 0,
            },
        });
    }
    let dist = pairwise_distances(rows);
    let core = core_distances(&dist, n, min_cluster_size);
    let mr = mutual_reachability(&dist, &core, n);
    drop(dist);
    let mst = prim_mst(&mr, n);
    let merges = single_linkage(&mst, n);
    let condensed = condense(&merges, n, min_cluster_size);
    let (selected, _) = select_clusters(&condensed);

    let mut parent = vec![usize::MAX; condensed.n_clusters];
    let mut is_selected = vec![false; condensed.n_clusters];
    for &s in &selected {
        is_selected[s] = true;
    }
    let mut labels: Vec<Option<usize>> = vec![None; n];
    if is_selected[0] {
        labels.iter_mut().for_each(|l| *l = Some(0));
    } else {
        for e in &condensed.edges {
            if let Child::Cluster(c) = e.child {
                parent[c] = e.parent;
            }
        }
        for e in &condensed.edges {
            if let Child::Point(p) = e.child {
                let mut c = e.parent;
                while c != 0 && !is_selected[c] {
                    c = parent[c];
                }
                if c != 0 {
                    labels[p] = Some(c);
                }
            }
        }
    }
    Ok(HdbscanResult {
        assignment: ClusterAssignment::from_labels(labels),
        core_distances: core,
        mst,
        condensed,
    })
}
