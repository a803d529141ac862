//! Studentized residuals of the embedding and normality summaries.

use std::str::FromStr;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::align::{AlignmentMode, AlignmentReport, Truth};
use crate::binning::BinnedPositions;
use crate::embed::Embedding;
use crate::error::{Error, Result};
use crate::linalg::{inv_sqrt_spd, inverse, symmetric_eigen};
use crate::scalar::Scalar;

/// Eigenvalue floor for inverse square roots.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Probabilities at which the chi-square QQ summary compares quantiles.
pub const QQ_PROBS: [f64; 7] = [0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Rows `(i, m)` of `X^`.
    Left,
    /// Rows `(i, l)` of `Y^`.
    Right,
}

impl FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" | "x" | "X" => Ok(Side::Left),
            "right" | "y" | "Y" => Ok(Side::Right),
            _ => Err(Error::arg(format!("unknown side '{s}' (left, right)"))),
        }
    }
}

/// How residuals are scaled.
///
/// `Corrected` uses the covariance implied by the first-order expansion of
/// the embedding: for the left side `sqrt(NL/M) (Q_Y^{-1} C Q_Y^{-1})^{-1/2}`
/// with `Q_Y = Y^T Y / (NL)`, for the right side
/// `sqrt(N) (Q_X^{-1} D Q_X^{-1})^{-1/2}` with `Q_X = X~^T X~ / (NM)`.
/// `Unadjusted` uses `sqrt(NL) (Q_X^{-1} C Q_X^{-1})^{-1/2}` and
/// `sqrt(NM) (Q_Y^{-1} D Q_Y^{-1})^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CltScaling {
    #[default]
    Corrected,
    Unadjusted,
}

impl FromStr for CltScaling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corrected" => Ok(Self::Corrected),
            "unadjusted" => Ok(Self::Unadjusted),
            _ => Err(Error::arg(format!("unknown CLT scaling '{s}' (corrected, unadjusted)"))),
        }
    }
}

/// `sum_k w_k b_k b_k^T / n` with `w_k = a . b_k`.
fn weighted_outer(a: ArrayView1<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    let d = b.ncols();
    let mut out = Array2::zeros((d, d));
    for row in b.rows() {
        let w = a.dot(&row);
        for p in 0..d {
            let wp = w * row[p];
            for q in 0..d {
                out[[p, q]] += wp * row[q];
            }
        }
    }
    out / b.nrows() as f64
}

fn check_pd(c: &Array2<f64>, what: &str) -> Result<()> {
    let (vals, _) = symmetric_eigen(c.view())?;
    let min = vals[vals.len() - 1];
    if !(min > 0.0) {
        return Err(Error::RankDeficient(format!(
            "{what} is not positive definite (smallest eigenvalue {min:e}); rank preservation fails"
        )));
    }
    Ok(())
}

/// `C_{i,m} = (1/NL) sum_j (X~^{(m,*)}_i . Y_j) Y_j Y_j^T` over all `NL`
/// rows of `Y`.
pub fn covariance_c(x_tilde: &BinnedPositions<f64>, y: ArrayView2<'_, f64>, i: usize, m: usize) -> Result<Array2<f64>> {
    if i >= x_tilde.n_nodes() || m >= x_tilde.n_bins() {
        return Err(Error::arg(format!("(i={i}, m={m}) out of range")));
    }
    let c = weighted_outer(x_tilde.block(m).row(i), y);
    check_pd(&c, &format!("C for (i={i}, m={m})"))?;
    Ok(c)
}

/// `D_{i,l} = (1/NM) sum_k (X~_k . Y^{(l,*)}_i) X~_k X~_k^T` over all `NM`
/// rows of `X~`.
pub fn covariance_d(x_tilde: &BinnedPositions<f64>, y: ArrayView2<'_, f64>, i: usize, layer: usize) -> Result<Array2<f64>> {
    let n = x_tilde.n_nodes();
    if i >= n || (layer + 1) * n > y.nrows() {
        return Err(Error::arg(format!("(i={i}, layer={layer}) out of range")));
    }
    let d = weighted_outer(y.row(layer * n + i), x_tilde.data().view());
    check_pd(&d, &format!("D for (i={i}, layer={layer})"))?;
    Ok(d)
}

#[derive(Debug, Clone)]
pub struct StudentizedResiduals {
    pub side: Side,
    pub scaling_rule: CltScaling,
    /// One row per `(node, bin)` or `(node, layer)`, in unfolded row order.
    pub z: Array2<f64>,
    /// `(node, bin)` or `(node, layer)` of each row.
    pub index: Vec<(usize, usize)>,
    /// The matrix applied to each raw residual row, including the scalar
    /// factor.
    pub scaling: Vec<Array2<f64>>,
    pub n_nodes: usize,
}

impl StudentizedResiduals {
    /// Rows of block `b` (a bin on the left side, a layer on the right).
    pub fn block(&self, b: usize) -> ArrayView2<'_, f64> {
        self.z.slice(s![b * self.n_nodes..(b + 1) * self.n_nodes, ..])
    }
}

/// Studentizes `X^ W_X - X~` (left) or `Y^ W_Y - Y` (right).
///
/// Needs an appendix-W alignment; the empirical moment matrices stand in
/// for their limits.
pub fn studentize<T: Scalar>(
    embedding: &Embedding<T>,
    truth: &Truth<'_>,
    alignment: &AlignmentReport,
    side: Side,
    scaling_rule: CltScaling,
) -> Result<StudentizedResiduals> {
    if alignment.mode != AlignmentMode::AppendixW {
        return Err(Error::arg("studentize needs an appendix-W alignment"));
    }
    let n = embedding.n_nodes;
    let m_bins = embedding.n_bins;
    let l = embedding.n_layers;
    let emb = embedding.cast::<f64>();
    let xt = truth.x_tilde.data();
    let y = &truth.y;
    let nm = (n * m_bins) as f64;
    let nl = (n * l) as f64;
    let q_x = xt.t().dot(xt) / nm;
    let q_y = y.t().dot(y) / nl;
    let (residual, q, factor, others, blocks) = match side {
        Side::Left => {
            let r = alignment.aligned_left(emb.left.view(), n) - xt;
            let (q, f) = match scaling_rule {
                CltScaling::Corrected => (&q_y, (nl / m_bins as f64).sqrt()),
                CltScaling::Unadjusted => (&q_x, nl.sqrt()),
            };
            (r, q, f, y.view(), m_bins)
        }
        Side::Right => {
            let r = alignment.aligned_right(emb.right.view(), n) - y;
            let (q, f) = match scaling_rule {
                CltScaling::Corrected => (&q_x, (nm / m_bins as f64).sqrt()),
                CltScaling::Unadjusted => (&q_y, nm.sqrt()),
            };
            (r, q, f, xt.view(), l)
        }
    };
    let q_inv = inverse(q.view())?;
    let own = match side {
        Side::Left => xt.view(),
        Side::Right => y.view(),
    };
    let rows: Vec<(Array1<f64>, Array2<f64>)> = (0..n * blocks)
        .into_par_iter()
        .map(|row| {
            let (b, i) = (row / n, row % n);
            let cov = weighted_outer(own.row(row), others);
            let sandwich = q_inv.dot(&cov).dot(&q_inv);
            let root = inv_sqrt_spd(sandwich.view(), EIGEN_FLOOR).map_err(|e| {
                let what = match side {
                    Side::Left => format!("(i={i}, m={b})"),
                    Side::Right => format!("(i={i}, layer={b})"),
                };
                Error::RankDeficient(format!("scaling matrix for {what} is not positive definite: {e}"))
            })?;
            let scale = root * factor;
            Ok((scale.dot(&residual.row(row)), scale))
        })
        .collect::<Result<_>>()?;
    let d = residual.ncols();
    let mut z = Array2::zeros((n * blocks, d));
    let mut scaling = Vec::with_capacity(rows.len());
    for (k, (zr, sc)) in rows.into_iter().enumerate() {
        z.row_mut(k).assign(&zr);
        scaling.push(sc);
    }
    Ok(StudentizedResiduals {
        side,
        scaling_rule,
        z,
        index: (0..n * blocks).map(|row| (row % n, row / n)).collect(),
        scaling,
        n_nodes: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QqPoint {
    pub prob: f64,
    pub empirical: f64,
    pub theoretical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalityReport {
    pub n_vectors: usize,
    pub dim: usize,
    /// Fraction of entries in `[-1.96, 1.96]`, per coordinate.
    pub coverage: Vec<f64>,
    /// The same over all coordinates.
    pub pooled_coverage: f64,
    pub mean: Vec<f64>,
    /// Empirical covariance (divisor `n`).
    pub covariance: Vec<Vec<f64>>,
    /// `max |cov - I|`.
    pub covariance_deviation: f64,
    /// `max |cov_pq|` over `p != q`.
    pub max_off_diagonal: f64,
    /// Quantiles of `||z||^2` against `chi^2_d`.
    pub chi2_qq: Vec<QqPoint>,
    /// Largest `|empirical / theoretical - 1|` over the QQ points.
    pub chi2_max_relative_deviation: f64,
    /// Some coordinate has (numerically) zero variance.
    pub degenerate: bool,
}

/// Coverage, covariance and chi-square summaries of residual vectors.
pub fn normality_report(z: ArrayView2<'_, f64>) -> Result<NormalityReport> {
    let (n, d) = z.dim();
    if n == 0 || d == 0 {
        return Err(Error::arg("normality_report needs at least one residual vector"));
    }
    let inside = |x: f64| (-1.96..=1.96).contains(&x);
    let coverage: Vec<f64> = (0..d)
        .map(|c| z.column(c).iter().filter(|&&x| inside(x)).count() as f64 / n as f64)
        .collect();
    let pooled_coverage = z.iter().filter(|&&x| inside(x)).count() as f64 / (n * d) as f64;
    let mean: Vec<f64> = (0..d).map(|c| z.column(c).sum() / n as f64).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for row in z.rows() {
        for p in 0..d {
            for q in 0..d {
                cov[p][q] += (row[p] - mean[p]) * (row[q] - mean[q]);
            }
        }
    }
    let mut dev = 0.0f64;
    let mut off = 0.0f64;
    for p in 0..d {
        for q in 0..d {
            cov[p][q] /= n as f64;
            let target = if p == q { 1.0 } else { 0.0 };
            dev = dev.max((cov[p][q] - target).abs());
            if p != q {
                off = off.max(cov[p][q].abs());
            }
        }
    }
    let degenerate = (0..d).any(|p| cov[p][p] < 1e-12);
    let mut sq: Vec<f64> = z.rows().into_iter().map(|r| r.dot(&r)).collect();
    sq.sort_by(f64::total_cmp);
    let chi = ChiSquared::new(d as f64).map_err(|e| Error::numerical(e.to_string()))?;
    let chi2_qq: Vec<QqPoint> = QQ_PROBS
        .iter()
        .map(|&p| {
            let k = ((p * n as f64).ceil() as usize).clamp(1, n) - 1;
            QqPoint {
                prob: p,
                empirical: sq[k],
                theoretical: chi.inverse_cdf(p),
            }
        })
        .collect();
    let chi2_max_relative_deviation = chi2_qq
        .iter()
        .map(|q| (q.empirical / q.theoretical - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(NormalityReport {
        n_vectors: n,
        dim: d,
        coverage,
        pooled_coverage,
        mean,
        covariance: cov,
        covariance_deviation: dev,
        max_off_diagonal: off,
        chi2_qq,
        chi2_max_relative_deviation,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn c_and_d_toy_values() {
        let xt = BinnedPositions::new(array![[1.0]], 1, 1).unwrap();
        let y = array![[1.0]];
        assert_eq!(covariance_c(&xt, y.view(), 0, 0).unwrap(), array![[1.0]]);
        assert_eq!(covariance_d(&xt, y.view(), 0, 0).unwrap(), array![[1.0]]);
        let xt = BinnedPositions::new(array![[1.0, 1.0]], 1, 1).unwrap();
        let y = array![[1.0, 0.0], [0.0, 1.0]];
        let c = covariance_c(&xt, y.view(), 0, 0).unwrap();
        assert_eq!(c, array![[0.5, 0.0], [0.0, 0.5]]);
    }

    #[test]
    fn singular_c_is_an_error() {
        let xt = BinnedPositions::new(array![[1.0, 1.0]], 1, 1).unwrap();
        let y = array![[1.0, 0.0], [2.0, 0.0]];
        assert!(matches!(covariance_c(&xt, y.view(), 0, 0), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn standard_normal_coverage() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = Array2::from_shape_fn((10_000, 1), |_| StandardNormal.sample(&mut rng));
        let rep = normality_report(z.view()).unwrap();
        assert!((0.94..=0.96).contains(&rep.pooled_coverage), "{}", rep.pooled_coverage);
        assert!(!rep.degenerate);
        let rep2 = normality_report((&z * 2.0).view()).unwrap();
        assert!((rep2.pooled_coverage - 0.673).abs() < 0.02);
    }

    #[test]
    fn zero_residuals_flagged() {
        let rep = normality_report(Array2::<f64>::zeros((200, 2)).view()).unwrap();
        assert_eq!(rep.pooled_coverage, 1.0);
        assert_eq!(rep.covariance_deviation, 1.0);
        assert!(rep.degenerate);
    }
}
