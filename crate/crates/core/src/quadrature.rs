//! 64-node Gauss-Legendre quadrature.

use std::f64::consts::PI;
use std::sync::OnceLock;

pub const GL_NODES: usize = 64;

/// Nodes and weights on `[-1, 1]`, computed once by Newton iteration on
/// the Legendre polynomial.
fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_NODES;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        (nodes, weights)
    })
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn gauss_legendre_64(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (nodes, weights) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes
        .iter()
        .zip(weights)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Vector-valued version; `f` writes `dim` values into its buffer.
pub fn gauss_legendre_64_vec(
    a: f64,
    b: f64,
    dim: usize,
    mut f: impl FnMut(f64, &mut [f64]),
) -> Vec<f64> {
    let (nodes, weights) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut buf = vec![0.0; dim];
    let mut acc = vec![0.0; dim];
    for (&x, &w) in nodes.iter().zip(weights) {
        f(mid + half * x, &mut buf);
        for (o, v) in acc.iter_mut().zip(&buf) {
            *o += w * v;
        }
    }
    acc.iter_mut().for_each(|o| *o *= half);
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        let (_, w) = rule();
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        // degree 126 is within the 2n - 1 = 127 exactness range
        let v = gauss_legendre_64(0.0, 1.0, |t| t.powi(126));
        assert!((v - 1.0 / 127.0).abs() < 1e-14);
        let v = gauss_legendre_64(-1.0, 2.0, |t| 3.0 * t * t - t);
        assert!((v - (9.0 - 1.5)).abs() < 1e-12);
    }

    #[test]
    fn smooth_periodic_to_1e10() {
        let v = gauss_legendre_64(0.1, 0.2, |t| 11.0 + 5.0 * (2.0 * PI * t + PI).cos());
        let exact = 1.1 + 5.0 / (2.0 * PI) * ((2.0 * PI * 0.2 + PI).sin() - (2.0 * PI * 0.1 + PI).sin());
        assert!((v - exact).abs() < 1e-10);
    }
}
