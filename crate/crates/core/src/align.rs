//! Alignment of estimated to true positions and recovery diagnostics.

use std::str::FromStr;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize, Serializer};

use crate::binning::BinnedPositions;
use crate::embed::{low_rank_svd, truncated_svd_with, Embedding, SvdMethod, TruncatedSvd};
use crate::error::{Error, Result};
use crate::linalg::{identity_deviation, inverse, solve_upper, thin_qr};
use crate::model::LatentModel;
use crate::scalar::Scalar;

/// Default number of sup-grid points per bin.
pub const DEFAULT_SUP_POINTS: usize = 10;

/// Tolerance for the orthonormality check on [`alignment_w`] inputs.
pub const ORTHONORMAL_TOL: f64 = 1e-6;

/// `max_i ||A_{i,*}||_2`.
pub fn two_to_infinity_norm<T: Scalar>(a: ArrayView2<'_, T>) -> T {
    a.rows()
        .into_iter()
        .map(|r| r.iter().map(|&x| x * x).sum::<T>().sqrt())
        .fold(T::zero(), |m, x| if x > m { x } else { m })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Procrustes<T> {
    pub q: Array2<T>,
    /// `A^T B` is numerically rank deficient, so `Q` is not unique.
    pub degenerate: bool,
}

/// `argmin_{Q orthogonal} ||A Q - B||_F` from the SVD of `A^T B`.
pub fn orthogonal_procrustes<T: Scalar>(a: ArrayView2<'_, T>, b: ArrayView2<'_, T>) -> Result<Procrustes<T>> {
    if a.dim() != b.dim() {
        return Err(Error::arg(format!("procrustes shapes differ: {:?} vs {:?}", a.dim(), b.dim())));
    }
    let m = a.t().dot(&b);
    let d = m.nrows();
    let svd = truncated_svd_with(m.view(), d, SvdMethod::Dense)?;
    let top = svd.singular_values[0];
    let low = svd.singular_values[d - 1];
    let degenerate = !(low > T::lit(1e-12) * top);
    Ok(Procrustes {
        q: svd.u.dot(&svd.v.t()),
        degenerate,
    })
}

fn check_orthonormal<T: Scalar>(name: &str, a: ArrayView2<'_, T>) -> Result<()> {
    let dev = identity_deviation(a.t().dot(&a).view());
    if !(dev.as_f64() <= ORTHONORMAL_TOL) {
        return Err(Error::arg(format!(
            "{name} columns are not orthonormal (max deviation {:e})",
            dev.as_f64()
        )));
    }
    Ok(())
}

/// `W = W1 W2^T` from the SVD `U_bar^T U_hat + V_bar^T V_hat = W1 S W2^T`.
pub fn alignment_w<T: Scalar>(
    u_bar: ArrayView2<'_, T>,
    u_hat: ArrayView2<'_, T>,
    v_bar: ArrayView2<'_, T>,
    v_hat: ArrayView2<'_, T>,
) -> Result<Array2<T>> {
    check_orthonormal("U_bar", u_bar)?;
    check_orthonormal("U_hat", u_hat)?;
    check_orthonormal("V_bar", v_bar)?;
    check_orthonormal("V_hat", v_hat)?;
    if u_bar.dim() != u_hat.dim() || v_bar.dim() != v_hat.dim() || u_bar.ncols() != v_bar.ncols() {
        return Err(Error::arg("alignment_w inputs have inconsistent shapes"));
    }
    let m = u_bar.t().dot(&u_hat) + v_bar.t().dot(&v_hat);
    let svd = truncated_svd_with(m.view(), m.nrows(), SvdMethod::Dense)?;
    Ok(svd.u.dot(&svd.v.t()))
}

/// `K` with `X_tilde K ~ X_bar`, `R` with `Y R ~ Y_bar`.
#[derive(Debug, Clone, PartialEq)]
pub struct KlrTransforms<T> {
    pub k: Array2<T>,
    pub r: Array2<T>,
    /// `||X_tilde K - X_bar||_F / ||X_bar||_F`.
    pub k_residual: T,
    pub r_residual: T,
}

fn least_squares<T: Scalar>(a: ArrayView2<'_, T>, b: ArrayView2<'_, T>) -> Result<Array2<T>> {
    let (q, r) = thin_qr(a)?;
    let d = r.nrows();
    let scale = (0..d).map(|k| r[[k, k]].abs()).fold(T::zero(), T::max);
    for k in 0..d {
        if !(r[[k, k]].abs() > T::lit(1e-12) * scale) {
            return Err(Error::RankDeficient(format!("least-squares design has rank < {d}")));
        }
    }
    solve_upper(r.view(), q.t().dot(&b).view())
}

fn relative_residual<T: Scalar>(a: ArrayView2<'_, T>, x: &Array2<T>, b: ArrayView2<'_, T>) -> T {
    let diff = a.dot(x) - b;
    crate::linalg::frobenius_norm(diff.view()) / crate::linalg::frobenius_norm(b)
}

/// Least-squares `K = (X~^T X~)^{-1} X~^T X_bar` and the analogous `R`,
/// where `X_bar = U_bar S_bar^{1/2}` and `Y_bar = V_bar S_bar^{1/2}`.
pub fn klr_transforms<T: Scalar>(
    x_tilde: ArrayView2<'_, T>,
    y: ArrayView2<'_, T>,
    lambda_bar: &TruncatedSvd<T>,
) -> Result<KlrTransforms<T>> {
    let root = lambda_bar.singular_values.mapv(|x| x.sqrt());
    let scale = |a: &Array2<T>| {
        let mut out = a.clone();
        for (k, &r) in root.iter().enumerate() {
            out.column_mut(k).mapv_inplace(|x| x * r);
        }
        out
    };
    let x_bar = scale(&lambda_bar.u);
    let y_bar = scale(&lambda_bar.v);
    if x_tilde.dim() != x_bar.dim() || y.dim() != y_bar.dim() {
        return Err(Error::arg("klr_transforms: shapes of X~, Y and the SVD factors disagree"));
    }
    let k = least_squares(x_tilde, x_bar.view())?;
    let r = least_squares(y, y_bar.view())?;
    let k_residual = relative_residual(x_tilde, &k, x_bar.view());
    let r_residual = relative_residual(y, &r, y_bar.view());
    Ok(KlrTransforms {
        k,
        r,
        k_residual,
        r_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AlignmentMode {
    /// One Procrustes rotation for all of `X^` and one for all of `Y^`.
    #[default]
    ProcrustesGlobal,
    /// One rotation per bin of `X^` and per layer of `Y^`.
    ProcrustesPerBin,
    /// `W_X = W^{-1} K^{-1}`, `W_Y = W^{-1} R^{-1}` from the exact-mean SVD.
    AppendixW,
}

impl FromStr for AlignmentMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "procrustes-global" => Ok(Self::ProcrustesGlobal),
            "procrustes-per-bin" => Ok(Self::ProcrustesPerBin),
            "appendix-w" | "appendix-W" => Ok(Self::AppendixW),
            _ => Err(Error::arg(format!(
                "unknown alignment mode '{s}' (procrustes-global, procrustes-per-bin, appendix-w)"
            ))),
        }
    }
}

/// Ground truth needed by [`recovery_error`].
#[derive(Debug, Clone)]
pub struct Truth<'a> {
    pub model: &'a LatentModel,
    pub x_tilde: BinnedPositions<f64>,
    pub y: Array2<f64>,
    /// Rank-`d` SVD of `Lambda_bar = X~ Y^T`.
    pub lambda_bar_svd: TruncatedSvd<f64>,
}

impl<'a> Truth<'a> {
    pub fn new(model: &'a LatentModel, n_bins: usize) -> Result<Self> {
        let x_tilde = crate::binning::binned_positions::<f64>(model, n_bins)?;
        let y = model.layer_positions().clone();
        let lambda_bar_svd = low_rank_svd(x_tilde.data().view(), y.view())?;
        Ok(Self {
            model,
            x_tilde,
            y,
            lambda_bar_svd,
        })
    }

    pub fn klr(&self) -> Result<KlrTransforms<f64>> {
        klr_transforms(self.x_tilde.data().view(), self.y.view(), &self.lambda_bar_svd)
    }
}

fn ser_matrix<S: Serializer>(a: &Array2<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = a.rows().into_iter().map(|r| r.to_vec()).collect();
    rows.serialize(s)
}

fn ser_matrices<S: Serializer>(v: &[Array2<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let all: Vec<Vec<Vec<f64>>> = v
        .iter()
        .map(|a| a.rows().into_iter().map(|r| r.to_vec()).collect())
        .collect();
    all.serialize(s)
}

fn ser_opt_matrix<S: Serializer>(a: &Option<Array2<f64>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match a {
        Some(m) => ser_matrix(m, s),
        None => s.serialize_none(),
    }
}

/// Error scalars, all two-to-infinity norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveryErrors {
    /// `||X^ W_X - X~||_{2,inf}`.
    pub x_error: f64,
    /// `||Y^ W_Y - Y||_{2,inf}`.
    pub y_error: f64,
    /// `max_m sup_{t in B_m} ||X^{(m,*)} W_X - X(t)||_{2,inf}` on the sup grid.
    pub continuous_error: f64,
    /// `max_m sup_{t in B_m} ||X~^{(m,*)} - X(t)||_{2,inf}` on the sup grid.
    pub bias: f64,
    pub sup_points_per_bin: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlignmentReport {
    pub mode: AlignmentMode,
    /// One matrix, or one per bin in per-bin mode.
    #[serde(serialize_with = "ser_matrices")]
    pub w_x: Vec<Array2<f64>>,
    /// One matrix, or one per layer in per-bin mode.
    #[serde(serialize_with = "ser_matrices")]
    pub w_y: Vec<Array2<f64>>,
    #[serde(serialize_with = "ser_opt_matrix")]
    pub procrustes_q: Option<Array2<f64>>,
    #[serde(serialize_with = "ser_opt_matrix")]
    pub w: Option<Array2<f64>>,
    #[serde(serialize_with = "ser_opt_matrix")]
    pub k_breve: Option<Array2<f64>>,
    #[serde(serialize_with = "ser_opt_matrix")]
    pub r_breve: Option<Array2<f64>>,
    /// `max |K R^T - I|` in appendix mode.
    pub kr_identity_deviation: Option<f64>,
    pub degenerate: bool,
    pub errors: RecoveryErrors,
}

impl AlignmentReport {
    /// `X^ W_X` as one `NM x d` matrix.
    pub fn aligned_left(&self, left: ArrayView2<'_, f64>, n_nodes: usize) -> Array2<f64> {
        apply_blocks(left, &self.w_x, n_nodes)
    }

    pub fn aligned_right(&self, right: ArrayView2<'_, f64>, n_nodes: usize) -> Array2<f64> {
        apply_blocks(right, &self.w_y, n_nodes)
    }
}

fn apply_blocks(a: ArrayView2<'_, f64>, transforms: &[Array2<f64>], n: usize) -> Array2<f64> {
    if transforms.len() == 1 {
        return a.dot(&transforms[0]);
    }
    let mut out = Array2::zeros((a.nrows(), transforms[0].ncols()));
    for (b, t) in transforms.iter().enumerate() {
        out.slice_mut(s![b * n..(b + 1) * n, ..])
            .assign(&a.slice(s![b * n..(b + 1) * n, ..]).dot(t));
    }
    out
}

/// Evaluation times for the sup over bin `m` (0-based): `points` equally
/// spaced values from the left end to the right end, with the left end
/// replaced by its right limit since it belongs to the previous bin.
pub fn sup_grid(m: usize, n_bins: usize, points: usize) -> Vec<f64> {
    let a = m as f64 / n_bins as f64;
    let b = (m + 1) as f64 / n_bins as f64;
    if points <= 1 {
        return vec![b];
    }
    (0..points)
        .map(|k| {
            if k == 0 {
                a + (b - a) * 1e-9
            } else {
                a + (b - a) * k as f64 / (points - 1) as f64
            }
        })
        .collect()
}

/// Aligns an embedding to the truth and computes all error scalars.
pub fn recovery_error<T: Scalar>(
    embedding: &Embedding<T>,
    truth: &Truth<'_>,
    mode: AlignmentMode,
    sup_points: usize,
) -> Result<AlignmentReport> {
    let n = embedding.n_nodes;
    let m_bins = embedding.n_bins;
    let l = embedding.n_layers;
    let d = embedding.dim();
    let x_tilde = truth.x_tilde.data();
    if x_tilde.dim() != (n * m_bins, d) || truth.y.dim() != (n * l, d) {
        return Err(Error::arg(format!(
            "embedding (N={n}, M={m_bins}, L={l}, d={d}) does not match the truth"
        )));
    }
    let emb = embedding.cast::<f64>();
    let x_hat = &emb.left;
    let y_hat = &emb.right;
    let mut report = AlignmentReport {
        mode,
        w_x: Vec::new(),
        w_y: Vec::new(),
        procrustes_q: None,
        w: None,
        k_breve: None,
        r_breve: None,
        kr_identity_deviation: None,
        degenerate: false,
        errors: RecoveryErrors {
            x_error: 0.0,
            y_error: 0.0,
            continuous_error: 0.0,
            bias: 0.0,
            sup_points_per_bin: sup_points,
        },
    };
    match mode {
        AlignmentMode::ProcrustesGlobal => {
            let px = orthogonal_procrustes(x_hat.view(), x_tilde.view())?;
            let py = orthogonal_procrustes(y_hat.view(), truth.y.view())?;
            report.degenerate = px.degenerate || py.degenerate;
            report.procrustes_q = Some(px.q.clone());
            report.w_x = vec![px.q];
            report.w_y = vec![py.q];
        }
        AlignmentMode::ProcrustesPerBin => {
            for b in 0..m_bins {
                let p = orthogonal_procrustes(emb.left_block(b), truth.x_tilde.block(b))?;
                report.degenerate |= p.degenerate;
                report.w_x.push(p.q);
            }
            for layer in 0..l {
                let rows = s![layer * n..(layer + 1) * n, ..];
                let p = orthogonal_procrustes(emb.right_block(layer), truth.y.slice(rows))?;
                report.degenerate |= p.degenerate;
                report.w_y.push(p.q);
            }
        }
        AlignmentMode::AppendixW => {
            if truth.lambda_bar_svd.rank() != d {
                return Err(Error::arg(format!(
                    "appendix-W needs an exact-mean SVD of rank {d}, truth has rank {}",
                    truth.lambda_bar_svd.rank()
                )));
            }
            let klr = truth.klr()?;
            let u_hat = emb.left_singular_vectors()?;
            let v_hat = emb.right_singular_vectors()?;
            let w = alignment_w(
                truth.lambda_bar_svd.u.view(),
                u_hat.view(),
                truth.lambda_bar_svd.v.view(),
                v_hat.view(),
            )?;
            let w_inv = w.t().to_owned();
            let k_inv = inverse(klr.k.view())?;
            let r_inv = inverse(klr.r.view())?;
            report.kr_identity_deviation = Some(identity_deviation(klr.k.dot(&klr.r.t()).view()));
            report.w_x = vec![w_inv.dot(&k_inv)];
            report.w_y = vec![w_inv.dot(&r_inv)];
            report.w = Some(w);
            report.k_breve = Some(klr.k);
            report.r_breve = Some(klr.r);
        }
    }
    let ax = report.aligned_left(x_hat.view(), n);
    let ay = report.aligned_right(y_hat.view(), n);
    report.errors.x_error = two_to_infinity_norm((&ax - x_tilde).view());
    report.errors.y_error = two_to_infinity_norm((&ay - &truth.y).view());
    let mut cont = 0.0f64;
    let mut bias = 0.0f64;
    for b in 0..m_bins {
        let rows = s![b * n..(b + 1) * n, ..];
        let est = ax.slice(rows);
        let avg = x_tilde.slice(rows);
        for t in sup_grid(b, m_bins, sup_points) {
            let xt = truth.model.positions_at(t);
            cont = cont.max(two_to_infinity_norm((&est - &xt).view()));
            bias = bias.max(two_to_infinity_norm((&avg - &xt).view()));
        }
    }
    report.errors.continuous_error = cont;
    report.errors.bias = bias;
    Ok(report)
}

/// Log-log least squares `log y = intercept + slope log x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::arg("rate fit needs at least two (x, y) pairs of equal length"));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::arg("rate fit needs positive values"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("rate fit needs at least two distinct x values"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        points: xs.len(),
    })
}

/// Condition number and incoherence of a tall matrix of rank `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralShape {
    pub kappa: f64,
    pub mu: f64,
}

pub fn spectral_shape(a: ArrayView2<'_, f64>) -> Result<SpectralShape> {
    let (n, m) = a.dim();
    let d = m.min(n);
    let svd = truncated_svd_with(a, d, SvdMethod::Dense)?;
    let kappa = svd.singular_values[0] / svd.singular_values[d - 1];
    let u2 = two_to_infinity_norm(svd.u.view()).powi(2);
    let v2 = two_to_infinity_norm(svd.v.view()).powi(2);
    Ok(SpectralShape {
        kappa,
        mu: (n as f64 / d as f64 * u2).max(m as f64 / d as f64 * v2),
    })
}

/// `X (X^T X)^{-1} X^T`.
pub fn projector(x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (q, r) = thin_qr(x)?;
    let d = r.nrows();
    let scale = (0..d).map(|k| r[[k, k]]).fold(0.0, f64::max);
    if (0..d).any(|k| !(r[[k, k]] > 1e-12 * scale)) {
        return Err(Error::RankDeficient("X(t) does not have full column rank".into()));
    }
    Ok(q.dot(&q.t()))
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionDiagnostics {
    #[serde(serialize_with = "ser_matrix")]
    pub moment_x: Array2<f64>,
    #[serde(serialize_with = "ser_matrix")]
    pub moment_y: Array2<f64>,
    pub shape_x: SpectralShape,
    pub shape_y: SpectralShape,
    /// `max ||X(t) - X(s)||_{2,inf} / |t - s|` over adjacent grid points.
    pub k_n: f64,
    /// `max ||P(t) - P(s)||_2 / |t - s|`.
    pub k_n1: f64,
    /// `max ||P(t)(X(t) - X(s))||_{2,inf} / |t - s|`, both orders.
    pub k_n2: f64,
    pub grid_points: usize,
    /// Some `X(t)^T X(t)` on the grid was singular; `k_n1`, `k_n2` skip it.
    pub projector_degenerate: bool,
}

/// Moments, spectral shape and empirical Lipschitz constants.
///
/// The Lipschitz constants use adjacent pairs of a uniform grid of
/// `grid_points` times on `[0, 1]`; by the triangle inequality the maximum
/// over adjacent pairs equals the maximum over all pairs of grid points for
/// `k_n` and `k_n1`.
pub fn assumption_diagnostics(
    x_tilde: &BinnedPositions<f64>,
    y: ArrayView2<'_, f64>,
    model: &LatentModel,
    grid_points: usize,
) -> Result<AssumptionDiagnostics> {
    if grid_points < 2 {
        return Err(Error::arg("diagnostic grid needs at least two points"));
    }
    let xt = x_tilde.data();
    let nm = xt.nrows() as f64;
    let nl = y.nrows() as f64;
    let moment_x = xt.t().dot(xt) / nm;
    let moment_y = y.t().dot(&y) / nl;
    let shape_x = spectral_shape(xt.view())?;
    let shape_y = spectral_shape(y)?;

    let times: Vec<f64> = (0..grid_points).map(|k| k as f64 / (grid_points - 1) as f64).collect();
    let mut degenerate = false;
    let frames: Vec<(Array2<f64>, Option<Array2<f64>>)> = times
        .iter()
        .map(|&t| {
            let x = model.positions_at(t);
            let q = match orthonormal_basis(x.view()) {
                Some(q) => Some(q),
                None => {
                    degenerate = true;
                    None
                }
            };
            (x, q)
        })
        .collect();
    let (mut k_n, mut k_n1, mut k_n2) = (0.0f64, 0.0f64, 0.0f64);
    for w in 0..grid_points - 1 {
        let h = times[w + 1] - times[w];
        let (xs, qs) = &frames[w];
        let (xt1, qt) = &frames[w + 1];
        let diff = xt1 - xs;
        k_n = k_n.max(two_to_infinity_norm(diff.view()) / h);
        if let (Some(qs), Some(qt)) = (qs, qt) {
            k_n1 = k_n1.max(projector_distance(qt.view(), qs.view()) / h);
            let pt = qt.dot(&qt.t().dot(&diff));
            let ps = qs.dot(&qs.t().dot(&diff));
            k_n2 = k_n2.max(two_to_infinity_norm(pt.view()).max(two_to_infinity_norm(ps.view())) / h);
        }
    }
    Ok(AssumptionDiagnostics {
        moment_x,
        moment_y,
        shape_x,
        shape_y,
        k_n,
        k_n1,
        k_n2,
        grid_points,
        projector_degenerate: degenerate,
    })
}

fn orthonormal_basis(x: ArrayView2<'_, f64>) -> Option<Array2<f64>> {
    if x.nrows() < x.ncols() {
        return None;
    }
    let (q, r) = thin_qr(x).ok()?;
    let d = r.nrows();
    let scale = (0..d).map(|k| r[[k, k]]).fold(0.0, f64::max);
    if (0..d).all(|k| r[[k, k]] > 1e-12 * scale) {
        Some(q)
    } else {
        None
    }
}

/// `||Q1 Q1^T - Q2 Q2^T||_2 = sqrt(1 - sigma_min(Q1^T Q2)^2)` for equal-rank
/// orthonormal bases.
fn projector_distance(q1: ArrayView2<'_, f64>, q2: ArrayView2<'_, f64>) -> f64 {
    let c = q1.t().dot(&q2);
    let d = c.nrows();
    match truncated_svd_with(c.view(), d, SvdMethod::Dense) {
        Ok(svd) => {
            let smin = svd.singular_values[d - 1].min(1.0);
            (1.0 - smin * smin).max(0.0).sqrt()
        }
        Err(_) => f64::NAN,
    }
}

/// Median of finite values; `NaN` when there are none.
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().cloned().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Row norms, used when a per-row rather than worst-case view is wanted.
pub fn row_norms(a: ArrayView2<'_, f64>) -> Array1<f64> {
    a.map_axis(Axis(1), |r| r.dot(&r).sqrt())
}
