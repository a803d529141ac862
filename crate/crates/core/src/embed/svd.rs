use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::dense::golub_reinsch;
use super::lanczos::lanczos_svd;
use crate::error::{Error, Result};
use crate::linalg::thin_qr;
use crate::scalar::Scalar;

/// Matrices with more entries than this go through the Lanczos path under
/// [`SvdMethod::Auto`], provided the requested rank is small.
pub const LANCZOS_ENTRY_THRESHOLD: usize = 1_000_000;

/// Residual tolerance of the Lanczos path, relative to `sigma_1`.
pub const LANCZOS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SvdMethod {
    #[default]
    Auto,
    Dense,
    Lanczos,
}

/// Rank-`d` truncated SVD `A ~ U diag(s) V^T`.
#[derive(Debug, Clone)]
pub struct TruncatedSvd<T> {
    pub u: Array2<T>,
    pub singular_values: Array1<T>,
    pub v: Array2<T>,
    /// QR sweeps (dense) or bidiagonalization steps (Lanczos).
    pub iterations: usize,
    pub method: SvdMethod,
}

impl<T: Scalar> TruncatedSvd<T> {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `U diag(s) V^T`.
    pub fn reconstruct(&self) -> Array2<T> {
        let mut us = self.u.clone();
        for (k, &s) in self.singular_values.iter().enumerate() {
            us.column_mut(k).mapv_inplace(|x| x * s);
        }
        us.dot(&self.v.t())
    }
}

/// Rank-`rank` truncated SVD with the deterministic sign convention.
///
/// Columns are ordered by nonincreasing singular value; equal values keep the
/// order in which the solver produced them. For each column of `U` the entry
/// of largest magnitude (lowest row index on ties) is made nonnegative and
/// the matching column of `V` is flipped with it.
pub fn truncated_svd<T: Scalar>(a: ArrayView2<'_, T>, rank: usize) -> Result<TruncatedSvd<T>> {
    truncated_svd_with(a, rank, SvdMethod::Auto)
}

pub fn truncated_svd_with<T: Scalar>(
    a: ArrayView2<'_, T>,
    rank: usize,
    method: SvdMethod,
) -> Result<TruncatedSvd<T>> {
    let (m, n) = a.dim();
    let kmin = m.min(n);
    if rank == 0 || rank > kmin {
        return Err(Error::arg(format!(
            "rank {rank} out of range 1..={kmin} for a {m}x{n} matrix"
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::arg("matrix has non-finite entries"));
    }
    let method = match method {
        SvdMethod::Auto => {
            if m * n > LANCZOS_ENTRY_THRESHOLD && 4 * rank <= kmin {
                SvdMethod::Lanczos
            } else {
                SvdMethod::Dense
            }
        }
        other => other,
    };
    let (mut u, mut s, mut v, iterations) = match method {
        SvdMethod::Lanczos => {
            let out = lanczos_svd(a, rank, LANCZOS_TOL)?;
            (out.u, out.s, out.v, out.steps)
        }
        _ => {
            let (u, w, v, sweeps) = golub_reinsch(a)?;
            let order = descending_order(&w);
            let sel: Vec<usize> = order.into_iter().take(rank).collect();
            (
                u.select(Axis(1), &sel),
                Array1::from_iter(sel.iter().map(|&k| w[k])),
                v.select(Axis(1), &sel),
                sweeps,
            )
        }
    };
    apply_sign_convention(&mut u, &mut v);
    // clean tiny negative zeros from rounding
    s.mapv_inplace(|x| x.max(T::zero()));
    Ok(TruncatedSvd {
        u,
        singular_values: s,
        v,
        iterations,
        method,
    })
}

/// All singular values in nonincreasing order (dense path).
pub fn singular_values<T: Scalar>(a: ArrayView2<'_, T>) -> Result<Array1<T>> {
    let (_, w, _, _) = golub_reinsch(a)?;
    let order = descending_order(&w);
    Ok(Array1::from_iter(order.into_iter().map(|k| w[k])))
}

/// Stable descending order of `w`.
fn descending_order<T: Scalar>(w: &Array1<T>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&x, &y| w[y].partial_cmp(&w[x]).unwrap_or(std::cmp::Ordering::Equal));
    order
}

/// Makes the largest-magnitude entry of each column of `u` nonnegative
/// (lowest row index on ties) and flips `v` to match.
pub fn apply_sign_convention<T: Scalar>(u: &mut Array2<T>, v: &mut Array2<T>) {
    for k in 0..u.ncols() {
        let col = u.column(k);
        let mut best = 0usize;
        let mut best_abs = T::neg_infinity();
        for (i, &x) in col.iter().enumerate() {
            if x.abs() > best_abs {
                best_abs = x.abs();
                best = i;
            }
        }
        if col[best] < T::zero() {
            u.column_mut(k).mapv_inplace(|x| -x);
            v.column_mut(k).mapv_inplace(|x| -x);
        }
    }
}

/// SVD of an explicitly low-rank product `L R^T` without forming it.
///
/// `left` is `p x d`, `right` is `q x d`, both of full column rank. Goes
/// through thin QR of each factor and a `d x d` dense SVD, so the result is
/// exact up to rounding even when `p * q` is huge.
pub fn low_rank_svd<T: Scalar>(
    left: ArrayView2<'_, T>,
    right: ArrayView2<'_, T>,
) -> Result<TruncatedSvd<T>> {
    let d = left.ncols();
    if right.ncols() != d {
        return Err(Error::arg("low_rank_svd factors have different widths"));
    }
    let (ql, rl) = thin_qr(left)?;
    let (qr, rr) = thin_qr(right)?;
    let core = rl.dot(&rr.t());
    let (a, w, b, sweeps) = golub_reinsch(core.view())?;
    let order = descending_order(&w);
    let a = a.select(Axis(1), &order);
    let b = b.select(Axis(1), &order);
    let s = Array1::from_iter(order.iter().map(|&k| w[k]));
    let mut u = ql.dot(&a);
    let mut v = qr.dot(&b);
    apply_sign_convention(&mut u, &mut v);
    Ok(TruncatedSvd {
        u,
        singular_values: s,
        v,
        iterations: sweeps,
        method: SvdMethod::Dense,
    })
}
