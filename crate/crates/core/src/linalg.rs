//! Small dense helpers shared by the embedding, alignment and CLT code.
//!
//! Everything here targets thin (`n x d`, `d` small) or tiny (`d x d`)
//! matrices; the large unfolded matrices only ever go through
//! [`crate::embed`].

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn frobenius_norm<T: Scalar>(a: ArrayView2<'_, T>) -> T {
    a.iter().map(|&x| x * x).sum::<T>().sqrt()
}

pub fn max_abs<T: Scalar>(a: ArrayView2<'_, T>) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// Largest entrywise deviation of `a` from the identity.
pub fn identity_deviation<T: Scalar>(a: ArrayView2<'_, T>) -> T {
    let mut dev = T::zero();
    for ((i, j), &x) in a.indexed_iter() {
        let target = if i == j { T::one() } else { T::zero() };
        dev = dev.max((x - target).abs());
    }
    dev
}

/// Thin Householder QR of a tall matrix (`rows >= cols`).
///
/// Returns `(Q, R)` with `Q` of shape `rows x cols` having orthonormal
/// columns and `R` upper triangular. Diagonal of `R` is made nonnegative.
pub fn thin_qr<T: Scalar>(a: ArrayView2<'_, T>) -> Result<(Array2<T>, Array2<T>)> {
    let (m, n) = a.dim();
    if m < n {
        return Err(Error::arg(format!("thin_qr needs rows >= cols, got {m}x{n}")));
    }
    let mut r = a.to_owned();
    let mut reflectors: Vec<Array1<T>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut v: Array1<T> = r.slice(ndarray::s![k.., k]).to_owned();
        let alpha = v.iter().map(|&x| x * x).sum::<T>().sqrt();
        if alpha == T::zero() {
            reflectors.push(Array1::zeros(m - k));
            continue;
        }
        let sign = if v[0] >= T::zero() { T::one() } else { -T::one() };
        v[0] += sign * alpha;
        let vnorm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
        v.mapv_inplace(|x| x / vnorm);
        for j in k..n {
            let mut col = r.slice_mut(ndarray::s![k.., j]);
            let dot = col.iter().zip(v.iter()).map(|(&c, &w)| c * w).sum::<T>();
            let two = T::lit(2.0);
            col.zip_mut_with(&v, |c, &w| *c -= two * dot * w);
        }
        reflectors.push(v);
    }
    // Accumulate Q = H_0 H_1 ... H_{n-1} applied to the first n columns of I.
    let mut q = Array2::<T>::zeros((m, n));
    for i in 0..n {
        q[[i, i]] = T::one();
    }
    for k in (0..n).rev() {
        let v = &reflectors[k];
        for j in 0..n {
            let mut col = q.slice_mut(ndarray::s![k.., j]);
            let dot = col.iter().zip(v.iter()).map(|(&c, &w)| c * w).sum::<T>();
            let two = T::lit(2.0);
            col.zip_mut_with(v, |c, &w| *c -= two * dot * w);
        }
    }
    let mut r_out = Array2::<T>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            r_out[[i, j]] = r[[i, j]];
        }
    }
    for i in 0..n {
        if r_out[[i, i]] < T::zero() {
            r_out.row_mut(i).mapv_inplace(|x| -x);
            q.column_mut(i).mapv_inplace(|x| -x);
        }
    }
    Ok((q, r_out))
}

/// Solves `R x = b` for upper triangular `R`, column by column of `b`.
pub fn solve_upper<T: Scalar>(r: ArrayView2<'_, T>, b: ArrayView2<'_, T>) -> Result<Array2<T>> {
    let n = r.nrows();
    let scale = max_abs(r);
    let mut x = b.to_owned();
    for c in 0..b.ncols() {
        for i in (0..n).rev() {
            let mut s = x[[i, c]];
            for k in i + 1..n {
                s -= r[[i, k]] * x[[k, c]];
            }
            let piv = r[[i, i]];
            if piv.abs() <= scale * T::epsilon() * T::from_count(n) || piv == T::zero() {
                return Err(Error::RankDeficient(format!(
                    "triangular factor has negligible pivot {piv:e} at {i}"
                )));
            }
            x[[i, c]] = s / piv;
        }
    }
    Ok(x)
}

/// Inverse of a small square matrix by Gauss-Jordan with partial pivoting.
pub fn inverse<T: Scalar>(a: ArrayView2<'_, T>) -> Result<Array2<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::arg("inverse of a non-square matrix"));
    }
    let scale = max_abs(a);
    let mut work = a.to_owned();
    let mut inv = Array2::<T>::eye(n);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&x, &y| {
                work[[x, col]]
                    .abs()
                    .partial_cmp(&work[[y, col]].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        let piv = work[[pivot_row, col]];
        if piv == T::zero() || piv.abs() <= scale * T::epsilon() * T::from_count(n) {
            return Err(Error::RankDeficient(format!(
                "matrix is numerically singular (pivot {piv:e} in column {col})"
            )));
        }
        if pivot_row != col {
            for j in 0..n {
                work.swap([pivot_row, j], [col, j]);
                inv.swap([pivot_row, j], [col, j]);
            }
        }
        let p = work[[col, col]];
        for j in 0..n {
            work[[col, j]] /= p;
            inv[[col, j]] /= p;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = work[[i, col]];
            if f == T::zero() {
                continue;
            }
            for j in 0..n {
                let wc = work[[col, j]];
                let ic = inv[[col, j]];
                work[[i, j]] -= f * wc;
                inv[[i, j]] -= f * ic;
            }
        }
    }
    Ok(inv)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvalues come back in nonincreasing order with eigenvectors as the
/// columns of the second matrix.
pub fn symmetric_eigen<T: Scalar>(a: ArrayView2<'_, T>) -> Result<(Array1<T>, Array2<T>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::arg("symmetric_eigen of a non-square matrix"));
    }
    let mut m = a.to_owned();
    // symmetrize away rounding asymmetry
    for i in 0..n {
        for j in i + 1..n {
            let avg = (m[[i, j]] + m[[j, i]]) * T::lit(0.5);
            m[[i, j]] = avg;
            m[[j, i]] = avg;
        }
    }
    let mut v = Array2::<T>::eye(n);
    let total = frobenius_norm(m.view());
    let max_sweeps = 100;
    let mut converged = n < 2;
    for _ in 0..max_sweeps {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum::<T>()
            .sqrt();
        if off <= T::epsilon() * total || off == T::zero() {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::numerical(format!(
            "Jacobi eigensolver did not converge in {max_sweeps} sweeps"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        m[[y, y]]
            .partial_cmp(&m[[x, x]])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = Array1::from_iter(order.iter().map(|&k| m[[k, k]]));
    let vectors = v.select(Axis(1), &order);
    Ok((values, vectors))
}

/// `A^{-1/2}` for symmetric positive definite `A`.
///
/// Eigenvalues at or below `floor` are an error rather than being clamped.
pub fn inv_sqrt_spd<T: Scalar>(a: ArrayView2<'_, T>, floor: T) -> Result<Array2<T>> {
    let (vals, vecs) = symmetric_eigen(a)?;
    let n = vals.len();
    if let Some(&min) = vals.iter().last() {
        if !(min > floor) {
            return Err(Error::RankDeficient(format!(
                "smallest eigenvalue {min:e} is not above the floor {floor:e}"
            )));
        }
    }
    let mut scaled = vecs.clone();
    for k in 0..n {
        let f = T::one() / vals[k].sqrt();
        scaled.column_mut(k).mapv_inplace(|x| x * f);
    }
    Ok(scaled.dot(&vecs.t()))
}

/// Row-wise stacking of equally wide blocks.
pub fn vstack<T: Scalar>(blocks: &[ArrayView2<'_, T>]) -> Result<Array2<T>> {
    ndarray::concatenate(Axis(0), blocks).map_err(|e| Error::arg(e.to_string()))
}
