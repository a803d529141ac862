//! Simulate, bin, embed and align over a grid of `(N, M)` cells and seeds.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::{fit_log_log, median, recovery_error, AlignmentMode, RateFit, Truth};
use crate::binning::{bin_events, exact_binned_mean, UnfoldedIntensity};
use crate::embed::{duase, Embedding};
use crate::error::{Error, Result};
use crate::model::{build_block_model, BlockModelSpec, LatentModel};
use crate::simulate::{sample_binned, sample_events};

/// How the histogram estimate of a cell is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    /// Bin counts drawn directly as Poisson variables.
    #[default]
    Binned,
    /// Full event stream by thinning, then binned.
    Events,
}

impl FromStr for Sampler {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binned" => Ok(Self::Binned),
            "events" => Ok(Self::Events),
            _ => Err(Error::arg(format!("unknown sampler '{s}' (binned, events)"))),
        }
    }
}

/// Draws `Lambda^` for one replicate.
pub fn sample_unfolded(model: &LatentModel, n_bins: usize, seed: u64, sampler: Sampler) -> Result<UnfoldedIntensity<f64>> {
    match sampler {
        Sampler::Binned => {
            let (mean, _) = exact_binned_mean::<f64>(model, n_bins)?;
            sample_binned(&mean, seed)
        }
        Sampler::Events => bin_events(&sample_events(model, seed)?, n_bins),
    }
}

/// `Lambda^` and its DUASE at rank `d`.
pub fn simulate_embedding(
    model: &LatentModel,
    n_bins: usize,
    d: usize,
    seed: u64,
    sampler: Sampler,
) -> Result<Embedding<f64>> {
    let lambda = sample_unfolded(model, n_bins, seed, sampler)?;
    duase(&lambda, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub n_nodes: usize,
    pub n_bins: usize,
    pub n_layers: usize,
    pub dim: usize,
    pub seed: u64,
}

/// One row of the tidy sweep output. Error fields are `NaN` when the cell
/// failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub n_nodes: usize,
    pub n_bins: usize,
    pub n_layers: usize,
    pub dim: usize,
    pub seed: u64,
    pub mode: AlignmentMode,
    pub x_error: f64,
    pub y_error: f64,
    pub continuous_error: f64,
    pub bias: f64,
    pub failure: Option<String>,
}

pub fn run_cell(
    spec: &BlockModelSpec,
    cell: Cell,
    mode: AlignmentMode,
    sampler: Sampler,
    sup_points: usize,
) -> CellResult {
    let run = || -> Result<_> {
        let model = build_block_model(spec, cell.n_nodes, cell.n_layers)?;
        let emb = simulate_embedding(&model, cell.n_bins, cell.dim, cell.seed, sampler)?;
        let truth = Truth::new(&model, cell.n_bins)?;
        recovery_error(&emb, &truth, mode, sup_points)
    };
    let mut out = CellResult {
        n_nodes: cell.n_nodes,
        n_bins: cell.n_bins,
        n_layers: cell.n_layers,
        dim: cell.dim,
        seed: cell.seed,
        mode,
        x_error: f64::NAN,
        y_error: f64::NAN,
        continuous_error: f64::NAN,
        bias: f64::NAN,
        failure: None,
    };
    match run() {
        Ok(rep) => {
            out.x_error = rep.errors.x_error;
            out.y_error = rep.errors.y_error;
            out.continuous_error = rep.errors.continuous_error;
            out.bias = rep.errors.bias;
        }
        Err(e) => out.failure = Some(e.to_string()),
    }
    out
}

/// Medians over seeds of one `(N, M)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellMedians {
    pub n_nodes: usize,
    pub n_bins: usize,
    pub x_error: f64,
    pub y_error: f64,
    pub continuous_error: f64,
    pub bias: f64,
    pub seeds: usize,
    pub failures: usize,
}

/// Log-log slopes of median error against `N` at one `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeRow {
    pub n_bins: usize,
    pub x_fit: Option<RateFit>,
    pub y_fit: Option<RateFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub cells: Vec<CellResult>,
    pub medians: Vec<CellMedians>,
    pub slopes: Vec<SlopeRow>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.failure.is_some()).count()
    }

    pub fn median_for(&self, n_nodes: usize, n_bins: usize) -> Option<&CellMedians> {
        self.medians.iter().find(|m| m.n_nodes == n_nodes && m.n_bins == n_bins)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_nodes: Vec<usize>,
    pub n_bins: Vec<usize>,
    pub n_layers: usize,
    pub dim: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub mode: AlignmentMode,
    #[serde(default)]
    pub sampler: Sampler,
    #[serde(default = "default_sup_points")]
    pub sup_points: usize,
}

fn default_sup_points() -> usize {
    crate::align::DEFAULT_SUP_POINTS
}

impl SweepConfig {
    pub fn check(&self) -> Result<()> {
        if self.n_nodes.is_empty() || self.n_bins.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("sweep lists (n_nodes, n_bins, seeds) must be nonempty".into()));
        }
        let mut s = self.seeds.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        if self.n_layers == 0 || self.dim == 0 {
            return Err(Error::Config("n_layers and dim must be positive".into()));
        }
        Ok(())
    }
}

/// Runs every `(N, M, seed)` cell. Failed cells are recorded, not fatal.
pub fn run_sweep(spec: &BlockModelSpec, cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.check()?;
    let mut cells = Vec::new();
    for &n in &cfg.n_nodes {
        for &m in &cfg.n_bins {
            for &seed in &cfg.seeds {
                cells.push(Cell {
                    n_nodes: n,
                    n_bins: m,
                    n_layers: cfg.n_layers,
                    dim: cfg.dim,
                    seed,
                });
            }
        }
    }
    let results: Vec<CellResult> = cells
        .par_iter()
        .map(|&c| run_cell(spec, c, cfg.mode, cfg.sampler, cfg.sup_points))
        .collect();
    Ok(summarize(results, &cfg.n_nodes, &cfg.n_bins))
}

pub fn summarize(cells: Vec<CellResult>, ns: &[usize], ms: &[usize]) -> SweepResult {
    let mut medians = Vec::new();
    for &n in ns {
        for &m in ms {
            let group: Vec<&CellResult> = cells.iter().filter(|c| c.n_nodes == n && c.n_bins == m).collect();
            let pick = |f: fn(&CellResult) -> f64| median(&group.iter().map(|c| f(c)).collect::<Vec<_>>());
            medians.push(CellMedians {
                n_nodes: n,
                n_bins: m,
                x_error: pick(|c| c.x_error),
                y_error: pick(|c| c.y_error),
                continuous_error: pick(|c| c.continuous_error),
                bias: pick(|c| c.bias),
                seeds: group.len(),
                failures: group.iter().filter(|c| c.failure.is_some()).count(),
            });
        }
    }
    let slopes = ms
        .iter()
        .map(|&m| {
            let rows: Vec<&CellMedians> = medians.iter().filter(|r| r.n_bins == m).collect();
            let xs: Vec<f64> = rows.iter().map(|r| r.n_nodes as f64).collect();
            let fit = |f: fn(&CellMedians) -> f64| {
                let ys: Vec<f64> = rows.iter().map(|r| f(r)).collect();
                fit_log_log(&xs, &ys).ok()
            };
            SlopeRow {
                n_bins: m,
                x_fit: fit(|r| r.x_error),
                y_fit: fit(|r| r.y_error),
            }
        })
        .collect();
    SweepResult { cells, medians, slopes }
}
