//! Histogram estimator and the doubly unfolded matrix.
//!
//! Row `m * N + i` and column `l * N + j` of the unfolded matrix hold the
//! rate of edge `(i, j)` in layer `l` during bin `B_m = (m/M, (m+1)/M]`
//! (0-based `m`).

use std::collections::{BTreeMap, HashMap};

use ndarray::{s, Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LatentModel;
use crate::scalar::Scalar;
use crate::simulate::EventStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntensityKind {
    /// `M` times event counts.
    Empirical,
    /// `M` times the integrated intensity over each bin.
    ExactMean,
}

/// An `NM x NL` unfolded intensity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedIntensity<T> {
    data: Array2<T>,
    n_nodes: usize,
    n_bins: usize,
    n_layers: usize,
    kind: IntensityKind,
}

impl<T: Scalar> UnfoldedIntensity<T> {
    pub fn new(data: Array2<T>, n_nodes: usize, n_bins: usize, n_layers: usize, kind: IntensityKind) -> Result<Self> {
        if n_nodes == 0 || n_bins == 0 || n_layers == 0 {
            return Err(Error::arg("N, M and L must be positive"));
        }
        if data.dim() != (n_nodes * n_bins, n_nodes * n_layers) {
            return Err(Error::arg(format!(
                "unfolded matrix is {:?}, expected ({}, {})",
                data.dim(),
                n_nodes * n_bins,
                n_nodes * n_layers
            )));
        }
        Ok(Self {
            data,
            n_nodes,
            n_bins,
            n_layers,
            kind,
        })
    }

    pub fn data(&self) -> &Array2<T> {
        &self.data
    }

    pub fn into_data(self) -> Array2<T> {
        self.data
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn kind(&self) -> IntensityKind {
        self.kind
    }

    /// The `N x N` block for bin `m` and layer `l` (0-based).
    pub fn block(&self, m: usize, layer: usize) -> ArrayView2<'_, T> {
        let n = self.n_nodes;
        self.data.slice(s![m * n..(m + 1) * n, layer * n..(layer + 1) * n])
    }

    pub fn entry(&self, m: usize, layer: usize, i: usize, j: usize) -> T {
        self.data[[m * self.n_nodes + i, layer * self.n_nodes + j]]
    }

    pub fn cast<U: Scalar>(&self) -> UnfoldedIntensity<U> {
        UnfoldedIntensity {
            data: self.data.mapv(|x| U::lit(x.as_f64())),
            n_nodes: self.n_nodes,
            n_bins: self.n_bins,
            n_layers: self.n_layers,
            kind: self.kind,
        }
    }
}

/// `X~`: bin averages of the trajectories, `NM x d`, block `m` at rows
/// `m * N .. (m + 1) * N`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedPositions<T> {
    data: Array2<T>,
    n_nodes: usize,
    n_bins: usize,
}

impl<T: Scalar> BinnedPositions<T> {
    pub fn new(data: Array2<T>, n_nodes: usize, n_bins: usize) -> Result<Self> {
        if data.nrows() != n_nodes * n_bins {
            return Err(Error::arg(format!(
                "binned positions have {} rows, expected {}",
                data.nrows(),
                n_nodes * n_bins
            )));
        }
        Ok(Self { data, n_nodes, n_bins })
    }

    pub fn data(&self) -> &Array2<T> {
        &self.data
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn block(&self, m: usize) -> ArrayView2<'_, T> {
        let n = self.n_nodes;
        self.data.slice(s![m * n..(m + 1) * n, ..])
    }
}

/// 0-based bin of `t` under `((m-1)/M, m/M]`, or `None` outside `(0, 1]`.
///
/// Boundaries are the floating point values `k as f64 / M as f64`, so an
/// event at exactly `k / M` lands in the bin that ends there.
pub fn bin_index(t: f64, n_bins: usize) -> Option<usize> {
    if !(t > 0.0 && t <= 1.0) || n_bins == 0 {
        return None;
    }
    let m = n_bins as f64;
    let mut k = ((t * m).ceil() as usize).clamp(1, n_bins);
    while k < n_bins && t > k as f64 / m {
        k += 1;
    }
    while k > 1 && t <= (k - 1) as f64 / m {
        k -= 1;
    }
    Some(k - 1)
}

/// Sparse event counts keyed by `(row, col)` of the unfolded layout.
#[derive(Debug, Clone, PartialEq)]
pub struct EventCounts {
    pub n_nodes: usize,
    pub n_bins: usize,
    pub n_layers: usize,
    pub counts: BTreeMap<(usize, usize), u64>,
}

impl EventCounts {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// `M` times the counts, as a dense matrix.
    pub fn to_unfolded<T: Scalar>(&self) -> Result<UnfoldedIntensity<T>> {
        let n = self.n_nodes;
        let mut data = Array2::zeros((n * self.n_bins, n * self.n_layers));
        let m = T::from_count(self.n_bins);
        for (&(r, c), &k) in &self.counts {
            data[[r, c]] = T::lit(k as f64) * m;
        }
        UnfoldedIntensity::new(data, n, self.n_bins, self.n_layers, IntensityKind::Empirical)
    }

    /// Merges groups of `factor` consecutive bins.
    pub fn coarsen(&self, factor: usize) -> Result<EventCounts> {
        if factor == 0 || self.n_bins % factor != 0 {
            return Err(Error::arg(format!("cannot merge {} bins in groups of {factor}", self.n_bins)));
        }
        let n = self.n_nodes;
        let mut counts = BTreeMap::new();
        for (&(r, c), &k) in &self.counts {
            let (m, i) = (r / n, r % n);
            *counts.entry(((m / factor) * n + i, c)).or_insert(0) += k;
        }
        Ok(EventCounts {
            n_nodes: n,
            n_bins: self.n_bins / factor,
            n_layers: self.n_layers,
            counts,
        })
    }
}

/// Counts events per bin, in parallel with a deterministic merge.
pub fn count_events(events: &EventStream, n_bins: usize) -> Result<EventCounts> {
    if n_bins == 0 {
        return Err(Error::arg("n_bins must be at least 1"));
    }
    let n = events.n_nodes();
    let l = events.n_layers();
    let maps: Vec<Result<HashMap<(usize, usize), u64>>> = events
        .events()
        .par_chunks(1 << 16)
        .enumerate()
        .map(|(chunk, evs)| {
            let mut map = HashMap::new();
            for (k, e) in evs.iter().enumerate() {
                let m = bin_index(e.time, n_bins).ok_or_else(|| {
                    Error::data(format!(
                        "event {} ({}, {}, {}, {}) has a time outside (0, 1]",
                        (chunk << 16) + k,
                        e.src,
                        e.dst,
                        e.layer,
                        e.time
                    ))
                })?;
                if e.src >= n || e.dst >= n || e.layer >= l {
                    return Err(Error::data(format!("event {} has an index out of range", (chunk << 16) + k)));
                }
                *map.entry((m * n + e.src, e.layer * n + e.dst)).or_insert(0) += 1;
            }
            Ok(map)
        })
        .collect();
    let mut counts = BTreeMap::new();
    for map in maps {
        for (key, k) in map? {
            *counts.entry(key).or_insert(0) += k;
        }
    }
    Ok(EventCounts {
        n_nodes: n,
        n_bins,
        n_layers: l,
        counts,
    })
}

/// The histogram estimator: `M` times the count of each edge in each bin.
pub fn bin_events<T: Scalar>(events: &EventStream, n_bins: usize) -> Result<UnfoldedIntensity<T>> {
    count_events(events, n_bins)?.to_unfolded()
}

/// `X~` for a model.
pub fn binned_positions<T: Scalar>(model: &LatentModel, n_bins: usize) -> Result<BinnedPositions<T>> {
    if n_bins == 0 {
        return Err(Error::arg("n_bins must be at least 1"));
    }
    BinnedPositions::new(model.binned_positions(n_bins).mapv(T::lit), model.n_nodes(), n_bins)
}

/// `Lambda_bar = X~ Y^T` together with `X~`.
///
/// Bin integrals are exact for closed-form trajectories and 64-node
/// Gauss-Legendre otherwise; the product then equals `M int_{B_m} lambda`
/// entrywise by linearity.
pub fn exact_binned_mean<T: Scalar>(
    model: &LatentModel,
    n_bins: usize,
) -> Result<(UnfoldedIntensity<T>, BinnedPositions<T>)> {
    let xt = binned_positions::<f64>(model, n_bins)?;
    let lambda = xt.data().dot(&model.layer_positions().t());
    let lambda = UnfoldedIntensity::new(
        lambda.mapv(T::lit),
        model.n_nodes(),
        n_bins,
        model.n_layers(),
        IntensityKind::ExactMean,
    )?;
    let xt = BinnedPositions::new(xt.data().mapv(T::lit), model.n_nodes(), n_bins)?;
    Ok((lambda, xt))
}
