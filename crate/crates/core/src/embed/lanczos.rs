//! Truncated SVD by Golub-Kahan-Lanczos bidiagonalization with full
//! reorthogonalization.
//!
//! Only matrix-vector products with `A` and `A^T` touch the large matrix, so
//! the cost is `O(rows * cols * steps)`. Convergence is declared once every
//! requested Ritz triple has residual `||A^T u - sigma v||` below
//! `tol * sigma_1`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::golub_reinsch;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fixed seed of the starting vector so results are reproducible.
const START_SEED: u64 = 0x5eed_1a2c_20b5_0001;

pub(crate) struct LanczosOutput<T> {
    pub u: Array2<T>,
    pub s: Array1<T>,
    pub v: Array2<T>,
    pub steps: usize,
}

fn norm<T: Scalar>(x: &Array1<T>) -> T {
    x.iter().map(|&a| a * a).sum::<T>().sqrt()
}

/// Two passes of classical Gram-Schmidt against the stored basis.
fn reorthogonalize<T: Scalar>(x: &mut Array1<T>, basis: &[Array1<T>]) {
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(x);
            x.scaled_add(-c, b);
        }
    }
}

fn random_unit<T: Scalar>(len: usize, rng: &mut ChaCha8Rng, basis: &[Array1<T>]) -> Option<Array1<T>> {
    for _ in 0..8 {
        let mut x = Array1::from_iter((0..len).map(|_| T::lit(rng.gen::<f64>() - 0.5)));
        reorthogonalize(&mut x, basis);
        let nx = norm(&x);
        if nx > T::lit(1e-8) {
            x.mapv_inplace(|a| a / nx);
            return Some(x);
        }
    }
    None
}

pub(crate) fn lanczos_svd<T: Scalar>(
    a: ArrayView2<'_, T>,
    rank: usize,
    tol: f64,
) -> Result<LanczosOutput<T>> {
    let (m, n) = a.dim();
    let kmax = m.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut us: Vec<Array1<T>> = Vec::new();
    let mut vs: Vec<Array1<T>> = Vec::new();
    let mut alphas: Vec<T> = Vec::new();
    let mut betas: Vec<T> = Vec::new();

    let mut v = random_unit::<T>(n, &mut rng, &[])
        .ok_or_else(|| Error::numerical("could not draw a Lanczos start vector"))?;
    let a_norm_guess = a.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    let tiny = T::epsilon() * a_norm_guess.max(T::min_positive_value()) * T::from_count(m.max(n));

    let mut beta_prev = T::zero();
    loop {
        let k = vs.len();
        // u_k = A v_k - beta_{k-1} u_{k-1}
        let mut u = a.dot(&v);
        if let Some(prev) = us.last() {
            u.scaled_add(-beta_prev, prev);
        }
        reorthogonalize(&mut u, &us);
        let mut alpha = norm(&u);
        if alpha <= tiny {
            alpha = T::zero();
            u = match random_unit(m, &mut rng, &us) {
                Some(x) => x,
                None => Array1::zeros(m),
            };
        } else {
            u.mapv_inplace(|x| x / alpha);
        }
        vs.push(v.clone());
        us.push(u.clone());
        alphas.push(alpha);

        // v_{k+1} = A^T u_k - alpha_k v_k
        let mut next = a.t().dot(&u);
        next.scaled_add(-alpha, &v);
        reorthogonalize(&mut next, &vs);
        let mut beta = norm(&next);
        let exhausted = k + 1 >= kmax;
        let breakdown = beta <= tiny;
        if breakdown {
            beta = T::zero();
        } else {
            next.mapv_inplace(|x| x / beta);
        }
        betas.push(beta);

        let steps = k + 1;
        let check = steps >= rank && (exhausted || breakdown || steps % 2 == 0 || steps == rank);
        if check {
            if let Some(out) = try_extract(&us, &vs, &alphas, &betas, rank, tol, exhausted)? {
                return Ok(out);
            }
        }
        if exhausted {
            return Err(Error::numerical(format!(
                "Lanczos bidiagonalization exhausted {kmax} steps without converging to rank {rank}"
            )));
        }
        if breakdown {
            // invariant subspace found; restart in the orthogonal complement
            v = match random_unit(n, &mut rng, &vs) {
                Some(x) => x,
                None => {
                    return Err(Error::numerical(format!(
                        "Lanczos breakdown after {steps} steps with no complement left"
                    )))
                }
            };
        } else {
            v = next;
        }
        beta_prev = beta;
    }
}

fn try_extract<T: Scalar>(
    us: &[Array1<T>],
    vs: &[Array1<T>],
    alphas: &[T],
    betas: &[T],
    rank: usize,
    tol: f64,
    force: bool,
) -> Result<Option<LanczosOutput<T>>> {
    let k = alphas.len();
    let mut b = Array2::<T>::zeros((k, k));
    for i in 0..k {
        b[[i, i]] = alphas[i];
        if i + 1 < k {
            b[[i, i + 1]] = betas[i];
        }
    }
    let (p, theta, q, _) = golub_reinsch(b.view())?;
    let mut order: Vec<usize> = (0..theta.len()).collect();
    order.sort_by(|&x, &y| theta[y].partial_cmp(&theta[x]).unwrap_or(std::cmp::Ordering::Equal));
    let sigma1 = theta[order[0]];
    let beta_k = betas[k - 1];
    let threshold = T::lit(tol) * sigma1.max(T::min_positive_value());
    let converged = order
        .iter()
        .take(rank)
        .all(|&c| (beta_k * p[[k - 1, c]]).abs() <= threshold);
    if !converged && !force {
        return Ok(None);
    }
    let sel: Vec<usize> = order.into_iter().take(rank).collect();
    let p_sel = p.select(Axis(1), &sel);
    let q_sel = q.select(Axis(1), &sel);
    let ubasis = stack_columns(us);
    let vbasis = stack_columns(vs);
    let u = ubasis.dot(&p_sel);
    let v = vbasis.dot(&q_sel);
    let s = Array1::from_iter(sel.iter().map(|&c| theta[c]));
    Ok(Some(LanczosOutput { u, s, v, steps: k }))
}

fn stack_columns<T: Scalar>(cols: &[Array1<T>]) -> Array2<T> {
    let rows = cols[0].len();
    let mut out = Array2::<T>::zeros((rows, cols.len()));
    for (j, c) in cols.iter().enumerate() {
        out.column_mut(j).assign(c);
    }
    out
}
