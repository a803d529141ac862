mod common;

use common::{gaussian, max_abs_diff, random_orthogonal};
use mippdpg::align::{recovery_error, AlignmentMode, Truth};
use mippdpg::binning::{exact_binned_mean, BinnedPositions};
use mippdpg::clt::{covariance_c, covariance_d, normality_report, studentize, CltScaling, Side};
use mippdpg::embed::duase;
use mippdpg::model::{build_block_model, BlockModelSpec};
use ndarray::{Array2, ArrayView2};
use statrs::distribution::{ContinuousCDF, Normal};

fn positive(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    gaussian(rows, cols, seed).mapv(|x| 1.0 + x.abs())
}

fn naive_weighted(a: &[f64], b: ArrayView2<'_, f64>) -> Array2<f64> {
    let d = b.ncols();
    let mut out = Array2::zeros((d, d));
    for r in 0..b.nrows() {
        let mut w = 0.0;
        for k in 0..d {
            w += a[k] * b[[r, k]];
        }
        for p in 0..d {
            for q in 0..d {
                out[[p, q]] += w * b[[r, p]] * b[[r, q]];
            }
        }
    }
    out / b.nrows() as f64
}

#[test]
fn c_and_d_match_explicit_sums() {
    let (n, m, l, d) = (6, 4, 3, 3);
    let xt = BinnedPositions::new(positive(n * m, d, 1), n, m).unwrap();
    let y = positive(n * l, d, 2);
    for (i, b) in [(0, 0), (5, 3), (2, 1)] {
        let c = covariance_c(&xt, y.view(), i, b).unwrap();
        let oracle = naive_weighted(&xt.data().row(b * n + i).to_vec(), y.view());
        assert!(max_abs_diff(c.view(), oracle.view()) <= 1e-12 * oracle[[0, 0]]);
    }
    for (i, layer) in [(0, 0), (5, 2), (3, 1)] {
        let dm = covariance_d(&xt, y.view(), i, layer).unwrap();
        let oracle = naive_weighted(&y.row(layer * n + i).to_vec(), xt.data().view());
        assert!(max_abs_diff(dm.view(), oracle.view()) <= 1e-12 * oracle[[0, 0]]);
    }
    assert!(covariance_c(&xt, y.view(), n, 0).is_err());
    assert!(covariance_d(&xt, y.view(), 0, l).is_err());
}

#[test]
fn swapping_roles_turns_c_into_d() {
    let (n, m, l, d) = (5, 3, 4, 2);
    let x = positive(n * m, d, 3);
    let y = positive(n * l, d, 4);
    let xt = BinnedPositions::new(x.clone(), n, m).unwrap();
    let yt = BinnedPositions::new(y.clone(), n, l).unwrap();
    for i in 0..n {
        for layer in 0..l {
            let dm = covariance_d(&xt, y.view(), i, layer).unwrap();
            let c = covariance_c(&yt, x.view(), i, layer).unwrap();
            assert!(max_abs_diff(dm.view(), c.view()) <= 1e-13 * dm[[0, 0]]);
        }
    }
}

#[test]
fn c_rotates_with_the_positions() {
    let (n, m, l, d) = (4, 3, 2, 3);
    let x = positive(n * m, d, 5);
    let y = positive(n * l, d, 6);
    let q = random_orthogonal(d, 9);
    let c = covariance_c(&BinnedPositions::new(x.clone(), n, m).unwrap(), y.view(), 1, 2).unwrap();
    let rotated = covariance_c(&BinnedPositions::new(x.dot(&q), n, m).unwrap(), y.dot(&q).view(), 1, 2).unwrap();
    let expected = q.t().dot(&c).dot(&q);
    assert!(max_abs_diff(rotated.view(), expected.view()) <= 1e-8 * c[[0, 0]].abs().max(1.0));
}

#[test]
fn isotropic_positions_give_scaled_identity() {
    // Y rows e_1, e_2 and x = (2, 2): every weight is 2, so C = (2 e_1 e_1^T + 2 e_2 e_2^T) / 2
    let y = ndarray::array![[1.0, 0.0], [0.0, 1.0]];
    let xt = BinnedPositions::new(ndarray::array![[2.0, 2.0]], 1, 1).unwrap();
    let c = covariance_c(&xt, y.view(), 0, 0).unwrap();
    assert!(max_abs_diff(c.view(), (Array2::<f64>::eye(2)).view()) < 1e-15);
}

#[test]
fn normality_of_standard_normal_draws() {
    let z = gaussian(20_000, 2, 31);
    let rep = normality_report(z.view()).unwrap();
    assert!((0.94..=0.96).contains(&rep.pooled_coverage), "{}", rep.pooled_coverage);
    assert!(rep.covariance_deviation < 0.05);
    assert!(!rep.degenerate);
    assert!(rep.chi2_max_relative_deviation < 0.1);

    let doubled = &z * 2.0;
    let rep = normality_report(doubled.view()).unwrap();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let expected = 2.0 * normal.cdf(0.98) - 1.0;
    assert!((rep.pooled_coverage - expected).abs() < 0.015, "{} vs {expected}", rep.pooled_coverage);
    assert!((rep.covariance[0][0] - 4.0).abs() < 0.2);
}

#[test]
fn noiseless_residuals_are_degenerate() {
    let model = build_block_model(&BlockModelSpec::smooth_default(), 20, 2).unwrap();
    let (mean, _) = exact_binned_mean::<f64>(&model, 5).unwrap();
    let emb = duase(&mean, 2).unwrap();
    let truth = Truth::new(&model, 5).unwrap();
    let al = recovery_error(&emb, &truth, AlignmentMode::AppendixW, 4).unwrap();
    for side in [Side::Left, Side::Right] {
        let z = studentize(&emb, &truth, &al, side, CltScaling::Corrected).unwrap();
        let rows = match side {
            Side::Left => 20 * 5,
            Side::Right => 20 * 2,
        };
        assert_eq!(z.z.dim(), (rows, 2));
        assert!(z.z.iter().all(|x| x.abs() < 1e-6));
        assert!(normality_report(z.z.view()).unwrap().degenerate);
    }
    let global = recovery_error(&emb, &truth, AlignmentMode::ProcrustesGlobal, 4).unwrap();
    assert!(studentize(&emb, &truth, &global, Side::Left, CltScaling::Corrected).is_err());
}
