//! Trajectory clustering: normalize, smooth, Frobenius distances, UPGMA.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Smoothed, normalized trajectories, one `M x d` matrix per node.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMatrix {
    pub trajectories: Vec<Array2<f64>>,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    pub window: usize,
}

/// Centers and scales each column of the stacked `NM x d` matrix `left`
/// (population standard deviation), then applies a centered box filter of
/// odd width `window` along time for each node. Near the ends the window is
/// truncated and the average is over the points actually covered.
pub fn normalize_and_smooth(
    left: ArrayView2<'_, f64>,
    n_nodes: usize,
    n_bins: usize,
    window: usize,
) -> Result<TrajectoryMatrix> {
    if window == 0 || window % 2 == 0 || window > n_bins {
        return Err(Error::arg(format!("window must be odd and in 1..={n_bins}, got {window}")));
    }
    if left.nrows() != n_nodes * n_bins {
        return Err(Error::arg(format!(
            "left factor has {} rows, expected N*M = {}",
            left.nrows(),
            n_nodes * n_bins
        )));
    }
    let rows = left.nrows() as f64;
    let d = left.ncols();
    let mut center = vec![0.0; d];
    let mut scale = vec![0.0; d];
    for c in 0..d {
        let col = left.column(c);
        let mean = col.sum() / rows;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / rows;
        if !(var.sqrt() > 1e-12 * mean.abs().max(1.0)) {
            return Err(Error::numerical(format!("dimension {c} has zero variance")));
        }
        center[c] = mean;
        scale[c] = var.sqrt();
    }
    let trajectories = (0..n_nodes)
        .map(|i| {
            let raw = Array2::from_shape_fn((n_bins, d), |(m, c)| (left[[m * n_nodes + i, c]] - center[c]) / scale[c]);
            box_smooth(raw.view(), window)
        })
        .collect();
    Ok(TrajectoryMatrix {
        trajectories,
        center,
        scale,
        window,
    })
}

/// Truncated centered moving average down the rows of `a`.
pub fn box_smooth(a: ArrayView2<'_, f64>, window: usize) -> Array2<f64> {
    let (m, d) = a.dim();
    let h = window / 2;
    Array2::from_shape_fn((m, d), |(t, c)| {
        let lo = t.saturating_sub(h);
        let hi = (t + h).min(m - 1);
        let sum: f64 = (lo..=hi).map(|k| a[[k, c]]).sum();
        sum / (hi - lo + 1) as f64
    })
}

/// `D_ij = ||X_i - X_j||_F`.
pub fn trajectory_distances(t: &TrajectoryMatrix) -> Result<Array2<f64>> {
    distances_of(&t.trajectories)
}

pub fn distances_of(mats: &[Array2<f64>]) -> Result<Array2<f64>> {
    let n = mats.len();
    if let Some(first) = mats.first() {
        if mats.iter().any(|m| m.dim() != first.dim()) {
            return Err(Error::arg("trajectories differ in shape"));
        }
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        mats[i].iter().zip(mats[j].iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
                    }
                })
                .collect()
        })
        .collect();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]))
}

/// One agglomeration step. Clusters are named by their lowest member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Labels `0..k` of the `k`-cluster cut, numbered by first appearance
    /// in node order.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        let n = self.n_leaves;
        if k == 0 || k > n {
            return Err(Error::arg(format!("cluster count {k} out of range 1..={n}")));
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut c = x;
            while p[c] != r {
                let next = p[c];
                p[c] = r;
                c = next;
            }
            r
        }
        for mg in self.merges.iter().take(n - k) {
            let a = find(&mut parent, mg.left);
            let b = find(&mut parent, mg.right);
            parent[b] = a;
        }
        let mut ids = HashMap::new();
        Ok((0..n)
            .map(|i| {
                let r = find(&mut parent, i);
                let next = ids.len();
                *ids.entry(r).or_insert(next)
            })
            .collect())
    }

    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    /// Cluster count just below the largest ratio between consecutive merge
    /// heights; `1` for fewer than three leaves. A jump from height zero
    /// counts as infinite.
    pub fn largest_gap_k(&self) -> usize {
        let h = self.heights();
        if h.len() < 2 {
            return 1;
        }
        let mut best = h.len() - 1;
        let mut gap = 0.0;
        for s in 0..h.len() - 1 {
            let g = if h[s] > 0.0 {
                h[s + 1] / h[s]
            } else if h[s + 1] > 0.0 {
                f64::INFINITY
            } else {
                continue;
            };
            if g > gap {
                gap = g;
                best = s;
            }
        }
        // cut after merge `best` (0-based): n - (best + 1) clusters remain
        self.n_leaves - (best + 1)
    }
}

/// Unweighted average linkage. Ties go to the lexicographically smallest
/// pair of cluster names.
pub fn upgma(dist: ArrayView2<'_, f64>) -> Result<Dendrogram> {
    let n = dist.nrows();
    if dist.ncols() != n {
        return Err(Error::arg("distance matrix must be square"));
    }
    for i in 0..n {
        if dist[[i, i]] != 0.0 {
            return Err(Error::arg(format!("distance matrix has nonzero diagonal at {i}")));
        }
        for j in 0..i {
            if dist[[i, j]] != dist[[j, i]] {
                return Err(Error::arg(format!("distance matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    let mut d = dist.to_owned();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let mut best = (usize::MAX, usize::MAX);
        let mut best_d = f64::INFINITY;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in i + 1..n {
                if active[j] && d[[i, j]] < best_d {
                    best_d = d[[i, j]];
                    best = (i, j);
                }
            }
        }
        let (a, b) = best;
        if a == usize::MAX {
            return Err(Error::numerical("no finite distance left to merge"));
        }
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for k in 0..n {
            if active[k] && k != a && k != b {
                let v = (na * d[[a, k]] + nb * d[[b, k]]) / (na + nb);
                d[[a, k]] = v;
                d[[k, a]] = v;
            }
        }
        active[b] = false;
        size[a] += size[b];
        merges.push(Merge {
            left: a,
            right: b,
            height: best_d,
            size: size[a],
        });
    }
    Ok(Dendrogram { n_leaves: n, merges })
}

/// UPGMA cut at `k` clusters, with the full tree.
pub fn agglomerative_cluster(dist: ArrayView2<'_, f64>, k: usize) -> Result<(Vec<usize>, Dendrogram)> {
    let tree = upgma(dist)?;
    let labels = tree.cut(k)?;
    Ok((labels, tree))
}

fn choose2(x: u64) -> f64 {
    (x * x.saturating_sub(1) / 2) as f64
}

/// Adjusted Rand index. Two identical trivial partitions score 1.
pub fn compare_partitions(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::arg("partitions have different lengths"));
    }
    let n = a.len() as u64;
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut ra: HashMap<usize, u64> = HashMap::new();
    let mut rb: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *ra.entry(x).or_default() += 1;
        *rb.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sa: f64 = ra.values().map(|&c| choose2(c)).sum();
    let sb: f64 = rb.values().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sa * sb / total;
    let max = 0.5 * (sa + sb);
    if max == expected {
        return Ok(if index == expected { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}
