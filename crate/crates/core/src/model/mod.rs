//! Ground-truth latent structure: dynamic node trajectories `X_i(t)` and
//! static per-layer destination positions `Y_{lj}`, with intensities
//! `lambda_{lij}(t) = X_i(t)^T Y_{lj}`.

mod block;
mod trajectory;

use ndarray::{Array2, ArrayView1};
use serde::Serialize;

use crate::error::{Error, Result};

pub use block::{
    build_block_model, build_discontinuous_block_model, build_smooth_block_model, contiguous_assignment,
    BlockModelSpec, Discontinuity, DynamicParams, LayerParams,
};
pub use trajectory::{PiecewiseLinear, Sinusoid, StepFunction, Trajectory, TrajectoryFn};

/// Default number of points of the positivity grid.
pub const DEFAULT_VALIDATION_GRID: usize = 100;

/// Latent positions of a multiplex network.
///
/// Nodes share trajectories by index, so a block model with `G` groups
/// stores `G` trajectories no matter how many nodes it has.
#[derive(Debug, Clone)]
pub struct LatentModel {
    n_nodes: usize,
    n_layers: usize,
    dim: usize,
    trajectories: Vec<Trajectory>,
    node_trajectory: Vec<usize>,
    /// `NL x d`, row `l * N + j` holds `Y_{lj}`.
    layer_positions: Array2<f64>,
}

impl LatentModel {
    /// One trajectory per node.
    pub fn new(trajectories: Vec<Trajectory>, n_layers: usize, layer_positions: Array2<f64>) -> Result<Self> {
        let n = trajectories.len();
        Self::shared(trajectories, (0..n).collect(), n_layers, layer_positions)
    }

    /// Nodes point into a table of shared trajectories.
    pub fn shared(
        trajectories: Vec<Trajectory>,
        node_trajectory: Vec<usize>,
        n_layers: usize,
        layer_positions: Array2<f64>,
    ) -> Result<Self> {
        let n_nodes = node_trajectory.len();
        if n_nodes == 0 || n_layers == 0 {
            return Err(Error::arg("model needs at least one node and one layer"));
        }
        let dim = layer_positions.ncols();
        if dim == 0 {
            return Err(Error::arg("latent dimension must be positive"));
        }
        if layer_positions.nrows() != n_nodes * n_layers {
            return Err(Error::arg(format!(
                "layer positions have {} rows, expected N*L = {}",
                layer_positions.nrows(),
                n_nodes * n_layers
            )));
        }
        if let Some(bad) = trajectories.iter().position(|t| t.dim() != dim) {
            return Err(Error::arg(format!(
                "trajectory {bad} has dimension {}, layer positions have {dim}",
                trajectories[bad].dim()
            )));
        }
        if let Some(&bad) = node_trajectory.iter().find(|&&k| k >= trajectories.len()) {
            return Err(Error::arg(format!("node refers to missing trajectory {bad}")));
        }
        if layer_positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::ModelValidity("layer positions must be finite".into()));
        }
        Ok(Self {
            n_nodes,
            n_layers,
            dim,
            trajectories,
            node_trajectory,
            layer_positions,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trajectory(&self, i: usize) -> &Trajectory {
        &self.trajectories[self.node_trajectory[i]]
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    /// Index into [`LatentModel::trajectories`] for each node.
    pub fn node_trajectory(&self) -> &[usize] {
        &self.node_trajectory
    }

    /// Stacked `Y` (`NL x d`, layer-major).
    pub fn layer_positions(&self) -> &Array2<f64> {
        &self.layer_positions
    }

    pub fn layer_position(&self, layer: usize, j: usize) -> ArrayView1<'_, f64> {
        self.layer_positions.row(layer * self.n_nodes + j)
    }

    pub fn position(&self, i: usize, t: f64) -> Vec<f64> {
        self.trajectory(i).eval(t)
    }

    /// `X(t)` as an `N x d` matrix.
    pub fn positions_at(&self, t: f64) -> Array2<f64> {
        let distinct: Vec<Vec<f64>> = self.trajectories.iter().map(|tr| tr.eval(t)).collect();
        let mut out = Array2::zeros((self.n_nodes, self.dim));
        for (i, &k) in self.node_trajectory.iter().enumerate() {
            for (c, v) in distinct[k].iter().enumerate() {
                out[[i, c]] = *v;
            }
        }
        out
    }

    /// All jump locations of any trajectory, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.trajectories.iter().flat_map(|t| t.breakpoints()).collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    }

    pub(crate) fn check_indices(&self, i: usize, j: usize, layer: usize) -> Result<()> {
        if i >= self.n_nodes || j >= self.n_nodes || layer >= self.n_layers {
            return Err(Error::arg(format!(
                "index (i={i}, j={j}, layer={layer}) out of range for N={}, L={}",
                self.n_nodes, self.n_layers
            )));
        }
        Ok(())
    }

    /// Intensity without range or validity checks.
    pub fn intensity_unchecked(&self, i: usize, j: usize, layer: usize, t: f64) -> f64 {
        let x = self.trajectory(i).eval(t);
        let y = self.layer_position(layer, j);
        x.iter().zip(y.iter()).map(|(a, b)| a * b).sum()
    }

    /// `X_i(t)^T Y_{lj}`.
    ///
    /// `t` may be anywhere in `[0, 1]`; the value at 0 is the right limit of
    /// the trajectory. A nonpositive result is a model-validity error.
    pub fn intensity_at(&self, i: usize, j: usize, layer: usize, t: f64) -> Result<f64> {
        self.check_indices(i, j, layer)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::arg(format!("time {t} outside [0, 1]")));
        }
        let v = self.intensity_unchecked(i, j, layer, t);
        if !(v > 0.0) {
            return Err(Error::ModelValidity(format!(
                "intensity {v} <= 0 at (i={i}, j={j}, layer={layer}, t={t})"
            )));
        }
        Ok(v)
    }

    /// `int_a^b lambda_{lij}(u) du` with `0 <= a < b <= 1`.
    pub fn integrated_intensity(&self, i: usize, j: usize, layer: usize, a: f64, b: f64) -> Result<f64> {
        self.check_indices(i, j, layer)?;
        if !(a < b) {
            return Err(Error::arg(format!("integration bounds need a < b, got a={a}, b={b}")));
        }
        if a < 0.0 || b > 1.0 {
            return Err(Error::arg(format!("integration window ({a}, {b}] outside [0, 1]")));
        }
        let xi = self.trajectory(i).integral(a, b);
        let y = self.layer_position(layer, j);
        Ok(xi.iter().zip(y.iter()).map(|(p, q)| p * q).sum())
    }

    /// `X~`: the `NM x d` stack of bin averages `M int_{B_m} X(t) dt`.
    pub fn binned_positions(&self, n_bins: usize) -> Array2<f64> {
        let m = n_bins as f64;
        let per_traj: Vec<Vec<Vec<f64>>> = self
            .trajectories
            .iter()
            .map(|tr| {
                (0..n_bins)
                    .map(|b| {
                        let lo = b as f64 / m;
                        let hi = (b + 1) as f64 / m;
                        tr.integral(lo, hi).into_iter().map(|v| v * m).collect()
                    })
                    .collect()
            })
            .collect();
        let mut out = Array2::zeros((self.n_nodes * n_bins, self.dim));
        for b in 0..n_bins {
            for (i, &k) in self.node_trajectory.iter().enumerate() {
                for (c, v) in per_traj[k][b].iter().enumerate() {
                    out[[b * self.n_nodes + i, c]] = *v;
                }
            }
        }
        out
    }

    /// Lowest node index per distinct trajectory.
    pub(crate) fn trajectory_representatives(&self) -> Vec<(usize, usize)> {
        let mut seen = vec![usize::MAX; self.trajectories.len()];
        for (i, &k) in self.node_trajectory.iter().enumerate() {
            if seen[k] == usize::MAX {
                seen[k] = i;
            }
        }
        seen.iter()
            .enumerate()
            .filter(|(_, &i)| i != usize::MAX)
            .map(|(k, &i)| (k, i))
            .collect()
    }

    /// Lowest destination index per distinct row of `Y^{(l,*)}`.
    pub(crate) fn layer_representatives(&self, layer: usize) -> Vec<usize> {
        let mut reps: Vec<usize> = Vec::new();
        for j in 0..self.n_nodes {
            let row = self.layer_position(layer, j);
            if !reps.iter().any(|&r| self.layer_position(layer, r) == row) {
                reps.push(j);
            }
        }
        reps
    }
}

/// A tuple where the intensity is not strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub source: usize,
    pub dest: usize,
    pub layer: usize,
    pub time: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityReport {
    pub min_intensity: f64,
    pub argmin: Violation,
    /// First nonpositive tuple in scan order (time, then source, layer, dest).
    pub first_violation: Option<Violation>,
    pub grid_points: usize,
    pub evaluations: usize,
}

impl PositivityReport {
    pub fn is_valid(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Scans all intensities on a uniform grid of `grid_resolution` points over
/// `[0, 1]`, plus both sides of every jump of the trajectories.
///
/// Nodes sharing a trajectory and destinations sharing a layer position are
/// evaluated once; reported indices are the lowest ones of each class.
pub fn validate_positivity(model: &LatentModel, grid_resolution: usize) -> Result<PositivityReport> {
    if grid_resolution < 2 {
        return Err(Error::arg("grid_resolution must be at least 2"));
    }
    let mut times: Vec<f64> = (0..grid_resolution)
        .map(|k| k as f64 / (grid_resolution - 1) as f64)
        .collect();
    for b in model.breakpoints() {
        times.push(b);
        times.push((b + 1e-12).min(1.0));
    }
    times.sort_by(f64::total_cmp);
    times.dedup();

    let sources = model.trajectory_representatives();
    let dests: Vec<Vec<usize>> = (0..model.n_layers).map(|l| model.layer_representatives(l)).collect();
    let mut min = Violation {
        source: 0,
        dest: 0,
        layer: 0,
        time: 0.0,
        value: f64::INFINITY,
    };
    let mut first = None;
    let mut evaluations = 0usize;
    let mut x = vec![0.0; model.dim];
    for &t in &times {
        for &(k, i) in &sources {
            model.trajectories[k].eval_into(t, &mut x);
            for (layer, reps) in dests.iter().enumerate() {
                for &j in reps {
                    let y = model.layer_position(layer, j);
                    let v: f64 = x.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
                    evaluations += 1;
                    let here = Violation {
                        source: i,
                        dest: j,
                        layer,
                        time: t,
                        value: v,
                    };
                    if v < min.value || v.is_nan() {
                        min = here;
                    }
                    if first.is_none() && !(v > 0.0) {
                        first = Some(here);
                    }
                }
            }
        }
    }
    Ok(PositivityReport {
        min_intensity: min.value,
        argmin: min,
        first_violation: first,
        grid_points: times.len(),
        evaluations,
    })
}
