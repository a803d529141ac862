use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::Array2;

use crate::quadrature::gauss_legendre_64_vec;

/// Piecewise-constant offset added to the second coordinate of a
/// [`Sinusoid`].
///
/// With breakpoints `tau_1 < ... < tau_k` the offset is `levels[0]` on
/// `(0, tau_1]`, `levels[1]` on `(tau_1, tau_2]` and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    pub breakpoints: Vec<f64>,
    pub levels: Vec<f64>,
}

impl StepFunction {
    pub fn value(&self, t: f64) -> f64 {
        let k = self.breakpoints.iter().filter(|&&b| b < t).count();
        self.levels[k]
    }

    /// Exact integral over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let mut edges = Vec::with_capacity(self.breakpoints.len() + 2);
        edges.push(f64::NEG_INFINITY);
        edges.extend_from_slice(&self.breakpoints);
        edges.push(f64::INFINITY);
        let mut total = 0.0;
        for (k, level) in self.levels.iter().enumerate() {
            let lo = edges[k].max(a);
            let hi = edges[k + 1].min(b);
            if hi > lo {
                total += level * (hi - lo);
            }
        }
        total
    }

    pub fn level_range(&self) -> (f64, f64) {
        let lo = self.levels.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// `[c1 + R sin(2 pi t + theta), c2 + R cos(2 pi t + theta) + step(t)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinusoid {
    pub c1: f64,
    pub c2: f64,
    pub radius: f64,
    pub phase: f64,
    pub step: Option<StepFunction>,
}

impl Sinusoid {
    fn eval(&self, t: f64) -> [f64; 2] {
        let arg = 2.0 * PI * t + self.phase;
        let step = self.step.as_ref().map_or(0.0, |s| s.value(t));
        [
            self.c1 + self.radius * arg.sin(),
            self.c2 + self.radius * arg.cos() + step,
        ]
    }

    fn integral(&self, a: f64, b: f64) -> [f64; 2] {
        let w = 2.0 * PI;
        let (arg_a, arg_b) = (w * a + self.phase, w * b + self.phase);
        let step = self.step.as_ref().map_or(0.0, |s| s.integral(a, b));
        [
            self.c1 * (b - a) + self.radius / w * (arg_a.cos() - arg_b.cos()),
            self.c2 * (b - a) + self.radius / w * (arg_b.sin() - arg_a.sin()) + step,
        ]
    }
}

/// Values on a uniform knot grid `t_k = k / (K - 1)` over `[0, 1]`,
/// linearly interpolated in between and held constant outside.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    values: Array2<f64>,
}

impl PiecewiseLinear {
    /// `values` is `K x d` with `K >= 2`.
    pub fn new(values: Array2<f64>) -> Option<Self> {
        (values.nrows() >= 2 && values.ncols() >= 1).then_some(Self { values })
    }

    pub fn knots(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let segs = (self.knots() - 1) as f64;
        let x = (t.clamp(0.0, 1.0)) * segs;
        let k = (x.floor() as usize).min(self.knots() - 2);
        (k, x - k as f64)
    }

    fn eval_into(&self, t: f64, out: &mut [f64]) {
        let (k, frac) = self.locate(t);
        for (c, o) in out.iter_mut().enumerate() {
            let a = self.values[[k, c]];
            let b = self.values[[k + 1, c]];
            *o = a + frac * (b - a);
        }
    }

    fn integral_into(&self, a: f64, b: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let d = out.len();
        let mut lo_val = vec![0.0; d];
        let mut hi_val = vec![0.0; d];
        // outside [0, 1] the table is constant at the end values
        let mut pieces: Vec<(f64, f64)> = Vec::new();
        let segs = self.knots() - 1;
        let h = 1.0 / segs as f64;
        if a < 0.0 {
            pieces.push((a, b.min(0.0)));
        }
        for k in 0..segs {
            let s = (k as f64 * h).max(a);
            let e = ((k + 1) as f64 * h).min(b);
            if e > s {
                pieces.push((s, e));
            }
        }
        if b > 1.0 {
            pieces.push((a.max(1.0), b));
        }
        for (s, e) in pieces {
            if e <= s {
                continue;
            }
            self.eval_into(s, &mut lo_val);
            self.eval_into(e, &mut hi_val);
            for c in 0..d {
                out[c] += 0.5 * (lo_val[c] + hi_val[c]) * (e - s);
            }
        }
    }
}

/// A user-supplied closed form `t -> X_i(t)` writing into a buffer of
/// length `dim`.
pub type TrajectoryFn = dyn Fn(f64, &mut [f64]) + Send + Sync;

/// Latent trajectory of one node.
#[derive(Clone)]
pub enum Trajectory {
    Constant(Vec<f64>),
    Sinusoid(Sinusoid),
    Table(PiecewiseLinear),
    /// Integrated with 64-node Gauss-Legendre per requested interval.
    Function { dim: usize, f: Arc<TrajectoryFn> },
}

impl fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trajectory::Constant(x) => f.debug_tuple("Constant").field(x).finish(),
            Trajectory::Sinusoid(s) => f.debug_tuple("Sinusoid").field(s).finish(),
            Trajectory::Table(t) => f.debug_tuple("Table").field(t).finish(),
            Trajectory::Function { dim, .. } => f.debug_struct("Function").field("dim", dim).finish(),
        }
    }
}

impl Trajectory {
    pub fn function(dim: usize, f: impl Fn(f64, &mut [f64]) + Send + Sync + 'static) -> Self {
        Trajectory::Function { dim, f: Arc::new(f) }
    }

    pub fn dim(&self) -> usize {
        match self {
            Trajectory::Constant(x) => x.len(),
            Trajectory::Sinusoid(_) => 2,
            Trajectory::Table(t) => t.values.ncols(),
            Trajectory::Function { dim, .. } => *dim,
        }
    }

    /// Whether [`Trajectory::integral`] is exact rather than quadrature.
    pub fn has_closed_form(&self) -> bool {
        !matches!(self, Trajectory::Function { .. })
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        match self {
            Trajectory::Constant(x) => out.copy_from_slice(x),
            Trajectory::Sinusoid(s) => out.copy_from_slice(&s.eval(t)),
            Trajectory::Table(tab) => tab.eval_into(t, out),
            Trajectory::Function { f, .. } => f(t, out),
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out);
        out
    }

    /// `int_a^b X(u) du`, exact for every variant except `Function`.
    pub fn integral(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        match self {
            Trajectory::Constant(x) => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = v * (b - a);
                }
            }
            Trajectory::Sinusoid(s) => out.copy_from_slice(&s.integral(a, b)),
            Trajectory::Table(tab) => tab.integral_into(a, b, &mut out),
            Trajectory::Function { dim, f } => {
                out = gauss_legendre_64_vec(a, b, *dim, |t, buf| f(t, buf));
            }
        }
        out
    }

    /// Interior points in `(0, 1)` where the trajectory may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Trajectory::Sinusoid(Sinusoid { step: Some(s), .. }) => s
                .breakpoints
                .iter()
                .cloned()
                .filter(|&b| b > 0.0 && b < 1.0)
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Exact supremum of `X(t)^T y` over `(a, b]` when cheaply available.
    ///
    /// Sinusoids give `const + R sqrt(y1^2 + y2^2)` plus the largest step
    /// level active on the interval; constants give the value itself.
    pub fn exact_sup_inner(&self, y: &[f64], a: f64, b: f64) -> Option<f64> {
        match self {
            Trajectory::Constant(x) => Some(x.iter().zip(y).map(|(p, q)| p * q).sum()),
            Trajectory::Sinusoid(s) => {
                let amp = s.radius.abs() * (y[0] * y[0] + y[1] * y[1]).sqrt();
                let step = match &s.step {
                    None => 0.0,
                    Some(st) => {
                        // levels active on (a, b]
                        let first = st.breakpoints.iter().filter(|&&bp| bp <= a).count();
                        let last = st.breakpoints.iter().filter(|&&bp| bp < b).count();
                        (first..=last)
                            .map(|k| st.levels[k] * y[1])
                            .fold(f64::NEG_INFINITY, f64::max)
                    }
                };
                Some(s.c1 * y[0] + s.c2 * y[1] + amp + step)
            }
            Trajectory::Table(tab) => {
                // inner product is linear between knots: max at knots or ends
                let mut best = f64::NEG_INFINITY;
                let mut buf = vec![0.0; tab.values.ncols()];
                let mut consider = |t: f64, best: &mut f64| {
                    tab.eval_into(t, &mut buf);
                    let v: f64 = buf.iter().zip(y).map(|(p, q)| p * q).sum();
                    *best = best.max(v);
                };
                consider(a, &mut best);
                consider(b, &mut best);
                let segs = (tab.knots() - 1) as f64;
                for k in 0..tab.knots() {
                    let t = k as f64 / segs;
                    if t > a && t < b {
                        consider(t, &mut best);
                    }
                }
                Some(best)
            }
            Trajectory::Function { .. } => None,
        }
    }
}
