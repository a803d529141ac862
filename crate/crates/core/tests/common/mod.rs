//! Reference implementations shared by the integration tests. Nothing here
//! calls into the library's linear algebra.
#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Full SVD by one-sided (Hestenes) Jacobi rotations on the columns of `a`
/// (or of `a^T` when `a` is wide). Returns `(U, s, V)` with `s` descending.
pub fn jacobi_svd(a: ArrayView2<'_, f64>) -> (Array2<f64>, Array1<f64>, Array2<f64>) {
    if a.nrows() < a.ncols() {
        let (u, s, v) = jacobi_svd(a.t());
        return (v, s, u);
    }
    let (m, n) = a.dim();
    let mut w = a.to_owned();
    let mut v = Array2::<f64>::eye(n);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    alpha += w[[i, p]] * w[[i, p]];
                    beta += w[[i, q]] * w[[i, q]];
                    gamma += w[[i, p]] * w[[i, q]];
                }
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (w[[i, p]], w[[i, q]]);
                    w[[i, p]] = c * x - s * y;
                    w[[i, q]] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[[i, p]], v[[i, q]]);
                    v[[i, p]] = c * x - s * y;
                    v[[i, q]] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).dot(&w.column(j)).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let mut u = Array2::zeros((m, n));
    let mut vs = Array2::zeros((n, n));
    let mut s = Array1::zeros(n);
    for (k, &j) in order.iter().enumerate() {
        s[k] = norms[j];
        if norms[j] > 0.0 {
            for i in 0..m {
                u[[i, k]] = w[[i, j]] / norms[j];
            }
        }
        for i in 0..n {
            vs[[i, k]] = v[[i, j]];
        }
    }
    (u, s, vs)
}

pub fn projector(q: ArrayView2<'_, f64>) -> Array2<f64> {
    q.dot(&q.t())
}

pub fn max_abs_diff(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
}

/// Haar-ish random orthogonal matrix by Gram-Schmidt on a Gaussian matrix.
pub fn random_orthogonal(d: usize, seed: u64) -> Array2<f64> {
    let g = gaussian(d, d, seed);
    let mut q = Array2::<f64>::zeros((d, d));
    for j in 0..d {
        let mut col = g.column(j).to_owned();
        for k in 0..j {
            let proj = q.column(k).dot(&col);
            col = col - &(q.column(k).to_owned() * proj);
        }
        let n = col.dot(&col).sqrt();
        q.column_mut(j).assign(&(col / n));
    }
    q
}

/// Row-wise maximum Euclidean norm by explicit loops.
pub fn row_max_norm(a: ArrayView2<'_, f64>) -> f64 {
    let mut best = 0.0f64;
    for i in 0..a.nrows() {
        let mut s = 0.0;
        for j in 0..a.ncols() {
            s += a[[i, j]] * a[[i, j]];
        }
        best = best.max(s.sqrt());
    }
    best
}

/// Adjusted Rand index from pair counts of the contingency table.
pub fn ari_oracle(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let mut same_a = 0u64;
    let mut same_b = 0u64;
    let mut same_both = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            let sa = a[i] == a[j];
            let sb = b[i] == b[j];
            same_a += sa as u64;
            same_b += sb as u64;
            same_both += (sa && sb) as u64;
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let expected = same_a as f64 * same_b as f64 / pairs;
    let max = 0.5 * (same_a + same_b) as f64;
    if max == expected {
        return 1.0;
    }
    (same_both as f64 - expected) / (max - expected)
}
