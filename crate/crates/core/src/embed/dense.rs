//! Dense SVD: Householder bidiagonalization (Golub-Kahan) followed by
//! implicitly shifted QR sweeps on the bidiagonal (Golub-Reinsch).

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 75;

/// Full thin SVD `A = U diag(w) V^T` of an `m x n` matrix, unsorted.
///
/// `U` is `m x k`, `V` is `n x k` with `k = min(m, n)`. Singular values are
/// nonnegative but not ordered; callers sort. Returns the total number of QR
/// sweeps as the last element.
pub(crate) fn golub_reinsch<T: Scalar>(
    a: ArrayView2<'_, T>,
) -> Result<(Array2<T>, Array1<T>, Array2<T>, usize)> {
    let (m, n) = a.dim();
    if m >= n {
        let mut u = a.to_owned();
        let (w, v, sweeps) = decompose_tall(&mut u)?;
        Ok((u, w, v, sweeps))
    } else {
        let mut u = a.t().to_owned();
        let (w, v, sweeps) = decompose_tall(&mut u)?;
        Ok((v, w, u, sweeps))
    }
}

#[inline]
fn pythag<T: Scalar>(a: T, b: T) -> T {
    a.hypot(b)
}

#[inline]
fn sign<T: Scalar>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// In-place decomposition of a tall `m x n` (`m >= n`) matrix held in `u`.
/// On return `u` holds the left singular vectors.
fn decompose_tall<T: Scalar>(u: &mut Array2<T>) -> Result<(Array1<T>, Array2<T>, usize)> {
    let (m, n) = u.dim();
    let mut w = Array1::<T>::zeros(n);
    let mut v = Array2::<T>::zeros((n, n));
    let mut rv1 = vec![T::zero(); n];
    let eps = T::epsilon();
    let zero = T::zero();
    let one = T::one();

    let mut g = zero;
    let mut scale = zero;
    let mut anorm = zero;
    let mut l = 0usize;

    // Householder reduction to upper bidiagonal form.
    for i in 0..n {
        l = i + 1;
        rv1[i] = scale * g;
        g = zero;
        scale = zero;
        let mut s;
        if i < m {
            for k in i..m {
                scale += u[[k, i]].abs();
            }
            if scale != zero {
                s = zero;
                for k in i..m {
                    u[[k, i]] /= scale;
                    s += u[[k, i]] * u[[k, i]];
                }
                let f = u[[i, i]];
                g = -sign(s.sqrt(), f);
                let h = f * g - s;
                u[[i, i]] = f - g;
                for j in l..n {
                    s = zero;
                    for k in i..m {
                        s += u[[k, i]] * u[[k, j]];
                    }
                    let f = s / h;
                    for k in i..m {
                        let uki = u[[k, i]];
                        u[[k, j]] += f * uki;
                    }
                }
                for k in i..m {
                    u[[k, i]] *= scale;
                }
            }
        }
        w[i] = scale * g;
        g = zero;
        scale = zero;
        if i < m && i + 1 != n {
            for k in l..n {
                scale += u[[i, k]].abs();
            }
            if scale != zero {
                s = zero;
                for k in l..n {
                    u[[i, k]] /= scale;
                    s += u[[i, k]] * u[[i, k]];
                }
                let f = u[[i, l]];
                g = -sign(s.sqrt(), f);
                let h = f * g - s;
                u[[i, l]] = f - g;
                for k in l..n {
                    rv1[k] = u[[i, k]] / h;
                }
                for j in l..m {
                    s = zero;
                    for k in l..n {
                        s += u[[j, k]] * u[[i, k]];
                    }
                    for k in l..n {
                        u[[j, k]] += s * rv1[k];
                    }
                }
                for k in l..n {
                    u[[i, k]] *= scale;
                }
            }
        }
        anorm = anorm.max(w[i].abs() + rv1[i].abs());
    }

    // Accumulate right-hand transformations.
    for i in (0..n).rev() {
        if i + 1 < n {
            if g != zero {
                for j in l..n {
                    v[[j, i]] = (u[[i, j]] / u[[i, l]]) / g;
                }
                for j in l..n {
                    let mut s = zero;
                    for k in l..n {
                        s += u[[i, k]] * v[[k, j]];
                    }
                    for k in l..n {
                        let vki = v[[k, i]];
                        v[[k, j]] += s * vki;
                    }
                }
            }
            for j in l..n {
                v[[i, j]] = zero;
                v[[j, i]] = zero;
            }
        }
        v[[i, i]] = one;
        g = rv1[i];
        l = i;
    }

    // Accumulate left-hand transformations.
    for i in (0..n.min(m)).rev() {
        let l = i + 1;
        let mut g = w[i];
        for j in l..n {
            u[[i, j]] = zero;
        }
        if g != zero {
            g = one / g;
            for j in l..n {
                let mut s = zero;
                for k in l..m {
                    s += u[[k, i]] * u[[k, j]];
                }
                let f = (s / u[[i, i]]) * g;
                for k in i..m {
                    let uki = u[[k, i]];
                    u[[k, j]] += f * uki;
                }
            }
            for j in i..m {
                u[[j, i]] *= g;
            }
        } else {
            for j in i..m {
                u[[j, i]] = zero;
            }
        }
        u[[i, i]] += one;
    }

    // Diagonalization of the bidiagonal form.
    let mut total_sweeps = 0usize;
    for k in (0..n).rev() {
        let mut its = 0usize;
        loop {
            // Test for splitting.
            let mut flag = true;
            let mut l = k;
            let mut nm = 0usize;
            loop {
                if l == 0 || rv1[l].abs() <= eps * anorm {
                    flag = false;
                    break;
                }
                nm = l - 1;
                if w[nm].abs() <= eps * anorm {
                    break;
                }
                l -= 1;
            }
            if flag {
                // Cancellation of rv1[l] when w[nm] is negligible.
                let mut c = zero;
                let mut s = one;
                for i in l..=k {
                    let f = s * rv1[i];
                    rv1[i] = c * rv1[i];
                    if f.abs() <= eps * anorm {
                        break;
                    }
                    let g = w[i];
                    let mut h = pythag(f, g);
                    w[i] = h;
                    h = one / h;
                    c = g * h;
                    s = -f * h;
                    for j in 0..m {
                        let y = u[[j, nm]];
                        let z = u[[j, i]];
                        u[[j, nm]] = y * c + z * s;
                        u[[j, i]] = z * c - y * s;
                    }
                }
            }
            let z = w[k];
            if l == k {
                if z < zero {
                    w[k] = -z;
                    for j in 0..n {
                        v[[j, k]] = -v[[j, k]];
                    }
                }
                break;
            }
            if its == MAX_SWEEPS {
                return Err(Error::numerical(format!(
                    "bidiagonal QR did not converge for singular value {k} after \
                     {MAX_SWEEPS} sweeps ({total_sweeps} sweeps in total, matrix {m}x{n})"
                )));
            }
            its += 1;
            total_sweeps += 1;

            // Wilkinson-type shift from the bottom 2x2 minor.
            let mut x = w[l];
            let nm = k - 1;
            let mut y = w[nm];
            let mut g = rv1[nm];
            let mut h = rv1[k];
            let mut f = ((y - z) * (y + z) + (g - h) * (g + h)) / (T::lit(2.0) * h * y);
            g = pythag(f, one);
            f = ((x - z) * (x + z) + h * ((y / (f + sign(g, f))) - h)) / x;

            // Next QR transformation.
            let mut c = one;
            let mut s = one;
            for j in l..=nm {
                let i = j + 1;
                g = rv1[i];
                y = w[i];
                h = s * g;
                g = c * g;
                let mut z = pythag(f, h);
                rv1[j] = z;
                c = f / z;
                s = h / z;
                f = x * c + g * s;
                g = g * c - x * s;
                h = y * s;
                y *= c;
                for jj in 0..n {
                    let xv = v[[jj, j]];
                    let zv = v[[jj, i]];
                    v[[jj, j]] = xv * c + zv * s;
                    v[[jj, i]] = zv * c - xv * s;
                }
                z = pythag(f, h);
                w[j] = z;
                if z != zero {
                    z = one / z;
                    c = f * z;
                    s = h * z;
                }
                f = c * g + s * y;
                x = c * y - s * g;
                for jj in 0..m {
                    let yu = u[[jj, j]];
                    let zu = u[[jj, i]];
                    u[[jj, j]] = yu * c + zu * s;
                    u[[jj, i]] = zu * c - yu * s;
                }
            }
            rv1[l] = zero;
            rv1[k] = f;
            w[k] = x;
        }
    }
    Ok((w, v, total_sweeps))
}
