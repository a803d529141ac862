//! Truncated SVD and the doubly unfolded adjacency spectral embedding.

mod dense;
mod lanczos;
mod svd;

use ndarray::{s, Array1, Array2, ArrayView2};
use serde::Serialize;

pub use svd::{
    apply_sign_convention, low_rank_svd, singular_values, truncated_svd, truncated_svd_with, SvdMethod,
    TruncatedSvd, LANCZOS_ENTRY_THRESHOLD, LANCZOS_TOL,
};

use crate::binning::UnfoldedIntensity;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default number of leading singular values kept in a [`SpectrumReport`].
pub const DEFAULT_SPECTRUM_LEN: usize = 30;

/// A flat spectrum has no consecutive ratio above this.
pub const FLAT_SPECTRUM_RATIO: f64 = 1.05;

/// Factor pair `X^ = U S^{1/2}` (`NM x d`) and `Y^ = V S^{1/2}` (`NL x d`).
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T> {
    pub left: Array2<T>,
    pub right: Array2<T>,
    pub singular_values: Array1<T>,
    pub n_nodes: usize,
    pub n_bins: usize,
    pub n_layers: usize,
}

impl<T: Scalar> Embedding<T> {
    pub fn from_svd(svd: TruncatedSvd<T>, n_nodes: usize, n_bins: usize, n_layers: usize) -> Result<Self> {
        if svd.u.nrows() != n_nodes * n_bins || svd.v.nrows() != n_nodes * n_layers {
            return Err(Error::arg("SVD factors do not match (N, M, L)"));
        }
        let root = svd.singular_values.mapv(|x| x.sqrt());
        let mut left = svd.u;
        let mut right = svd.v;
        for (k, &r) in root.iter().enumerate() {
            left.column_mut(k).mapv_inplace(|x| x * r);
            right.column_mut(k).mapv_inplace(|x| x * r);
        }
        Ok(Self {
            left,
            right,
            singular_values: svd.singular_values,
            n_nodes,
            n_bins,
            n_layers,
        })
    }

    pub fn dim(&self) -> usize {
        self.singular_values.len()
    }

    /// `X^{(m,*)}`, rows `m N .. (m + 1) N`.
    pub fn left_block(&self, m: usize) -> ArrayView2<'_, T> {
        let n = self.n_nodes;
        self.left.slice(s![m * n..(m + 1) * n, ..])
    }

    /// `Y^{(l,*)}`.
    pub fn right_block(&self, layer: usize) -> ArrayView2<'_, T> {
        let n = self.n_nodes;
        self.right.slice(s![layer * n..(layer + 1) * n, ..])
    }

    /// `X^ Y^^T`.
    pub fn reconstruct(&self) -> Array2<T> {
        self.left.dot(&self.right.t())
    }

    fn unscale(&self, a: &Array2<T>) -> Result<Array2<T>> {
        let mut out = a.clone();
        for (k, &s) in self.singular_values.iter().enumerate() {
            if !(s > T::zero()) {
                return Err(Error::RankDeficient(format!("singular value {k} is zero")));
            }
            let f = T::one() / s.sqrt();
            out.column_mut(k).mapv_inplace(|x| x * f);
        }
        Ok(out)
    }

    /// `U = X^ S^{-1/2}`.
    pub fn left_singular_vectors(&self) -> Result<Array2<T>> {
        self.unscale(&self.left)
    }

    /// `V = Y^ S^{-1/2}`.
    pub fn right_singular_vectors(&self) -> Result<Array2<T>> {
        self.unscale(&self.right)
    }

    pub fn cast<U: Scalar>(&self) -> Embedding<U> {
        let c = |a: &Array2<T>| a.mapv(|x| U::lit(x.as_f64()));
        Embedding {
            left: c(&self.left),
            right: c(&self.right),
            singular_values: self.singular_values.mapv(|x| U::lit(x.as_f64())),
            n_nodes: self.n_nodes,
            n_bins: self.n_bins,
            n_layers: self.n_layers,
        }
    }
}

/// DUASE of an unfolded matrix at rank `d`.
pub fn duase<T: Scalar>(lambda: &UnfoldedIntensity<T>, d: usize) -> Result<Embedding<T>> {
    duase_with(lambda, d, SvdMethod::Auto)
}

pub fn duase_with<T: Scalar>(lambda: &UnfoldedIntensity<T>, d: usize, method: SvdMethod) -> Result<Embedding<T>> {
    let svd = truncated_svd_with(lambda.data().view(), d, method)?;
    Embedding::from_svd(svd, lambda.n_nodes(), lambda.n_bins(), lambda.n_layers())
}

/// Leading singular values and the dimension picked from them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub leading_singular_values: Vec<f64>,
    /// `sigma_k / sigma_{k+1}` for consecutive pairs.
    pub gap_ratios: Vec<f64>,
    pub chosen_d: usize,
    pub warning: Option<String>,
}

/// Picks `d` as the position of the largest ratio `sigma_d / sigma_{d+1}`,
/// searching `d >= min_d`.
///
/// A zero `sigma_{d+1}` counts as an infinite ratio. When no ratio exceeds
/// [`FLAT_SPECTRUM_RATIO`] the spectrum has no visible elbow and the largest
/// candidate is returned with a warning.
pub fn choose_dimension(values: &[f64], min_d: usize) -> (usize, Vec<f64>, Option<String>) {
    let min_d = min_d.max(1);
    let ratios: Vec<f64> = values
        .windows(2)
        .map(|w| if w[1] > 0.0 { w[0] / w[1] } else { f64::INFINITY })
        .collect();
    if values.len() < 2 || min_d > ratios.len() {
        return (
            values.len().max(1),
            ratios,
            Some("fewer than two singular values available for the gap rule".into()),
        );
    }
    let mut best = min_d;
    for k in min_d..=ratios.len() {
        if ratios[k - 1] > ratios[best - 1] {
            best = k;
        }
    }
    if ratios[best - 1] < FLAT_SPECTRUM_RATIO {
        let k = values.len();
        return (
            k,
            ratios,
            Some(format!("flat spectrum: no ratio above {FLAT_SPECTRUM_RATIO}, using d = {k}")),
        );
    }
    (best, ratios, None)
}

/// Computes up to `k_max` leading singular values and applies
/// [`choose_dimension`].
pub fn select_dimension<T: Scalar>(a: ArrayView2<'_, T>, k_max: usize, min_d: usize) -> Result<SpectrumReport> {
    let (m, n) = a.dim();
    let k = k_max.min(m).min(n);
    if k == 0 {
        return Err(Error::arg("k_max must be positive"));
    }
    let values: Vec<f64> = if m * n > LANCZOS_ENTRY_THRESHOLD && 4 * k <= m.min(n) {
        truncated_svd_with(a, k, SvdMethod::Lanczos)?
            .singular_values
            .iter()
            .map(|x| x.as_f64())
            .collect()
    } else {
        singular_values(a)?.iter().take(k).map(|x| x.as_f64()).collect()
    };
    let (chosen_d, gap_ratios, warning) = choose_dimension(&values, min_d);
    Ok(SpectrumReport {
        leading_singular_values: values,
        gap_ratios,
        chosen_d,
        warning,
    })
}
