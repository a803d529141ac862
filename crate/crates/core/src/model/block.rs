//! Block-structured models: nodes in the same dynamic group share a
//! sinusoidal trajectory and nodes in the same layer group share a
//! destination position.

use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::trajectory::{Sinusoid, StepFunction, Trajectory};
use super::{validate_positivity, LatentModel, DEFAULT_VALIDATION_GRID};
use crate::error::{Error, Result};

/// `mu_g(t) = [c1 + R sin(2 pi t + phase), c2 + R cos(2 pi t + phase)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicParams {
    pub c1: f64,
    pub c2: f64,
    pub radius: f64,
    pub phase: f64,
}

/// One layer: group `q` sits at `[offsets[q] + cos(angles[q]), offsets[q] + sin(angles[q])]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub offsets: Vec<f64>,
    pub angles: Vec<f64>,
}

/// Step added to the second coordinate: level `k` is
/// `multipliers[k] * radius` on `(tau_k, tau_{k+1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discontinuity {
    pub breakpoints: Vec<f64>,
    pub multipliers: Vec<f64>,
}

impl Default for Discontinuity {
    fn default() -> Self {
        Self {
            breakpoints: vec![0.25, 0.5, 0.75],
            multipliers: vec![0.0, 0.4, -0.3, 0.7],
        }
    }
}

/// Parameters of a two-dimensional block model.
///
/// Group memberships come either from explicit 0-based label lists or from
/// fractions split into contiguous index blocks (see
/// [`contiguous_assignment`]). Layer memberships default to the dynamic
/// ones when neither `layer_fractions` nor `layer_group_of_node` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockModelSpec {
    pub n_groups_dynamic: usize,
    pub n_groups_layer: usize,
    #[serde(default)]
    pub dynamic_fractions: Option<Vec<f64>>,
    #[serde(default)]
    pub layer_fractions: Option<Vec<f64>>,
    #[serde(default)]
    pub group_of_node: Option<Vec<usize>>,
    /// One label list per layer.
    #[serde(default)]
    pub layer_group_of_node: Option<Vec<Vec<usize>>>,
    pub dynamic_params: Vec<DynamicParams>,
    /// One entry per layer.
    pub layer_params: Vec<LayerParams>,
    #[serde(default)]
    pub discontinuity: Option<Discontinuity>,
}

impl BlockModelSpec {
    /// Three dynamic groups split 40/40/20 with `R_g = 5g`,
    /// `c_{1,g} = c_{2,g} = 2 R_g + 1`, `theta_g = g pi`, and three layers;
    /// layer 2 merges groups 1 and 2, layer 3 merges groups 2 and 3.
    pub fn smooth_default() -> Self {
        let dynamic_params = (1..=3)
            .map(|g| {
                let r = 5.0 * g as f64;
                DynamicParams {
                    c1: 2.0 * r + 1.0,
                    c2: 2.0 * r + 1.0,
                    radius: r,
                    phase: g as f64 * PI,
                }
            })
            .collect();
        let layer_params = vec![
            LayerParams {
                offsets: vec![1.0, 2.0, 3.0],
                angles: vec![PI, PI / 2.0, PI / 3.0],
            },
            LayerParams {
                offsets: vec![2.0, 2.0, 4.0],
                angles: vec![PI / 2.0, PI / 2.0, PI / 3.0],
            },
            LayerParams {
                offsets: vec![3.0, 5.0, 5.0],
                angles: vec![PI / 2.0, PI / 6.0, PI / 6.0],
            },
        ];
        Self {
            n_groups_dynamic: 3,
            n_groups_layer: 3,
            dynamic_fractions: Some(vec![0.4, 0.4, 0.2]),
            layer_fractions: None,
            group_of_node: None,
            layer_group_of_node: None,
            dynamic_params,
            layer_params,
            discontinuity: None,
        }
    }

    /// [`BlockModelSpec::smooth_default`] plus the step at 0.25/0.5/0.75
    /// with levels 0, 0.4R, -0.3R, 0.7R.
    pub fn discontinuous_default() -> Self {
        Self {
            discontinuity: Some(Discontinuity::default()),
            ..Self::smooth_default()
        }
    }

    /// Synthetic stand-in for an air-traffic style network: six dynamic
    /// groups with distinct phases and `n_layers` layers of three
    /// destination groups each.
    pub fn standin(n_layers: usize) -> Self {
        let g1 = 6;
        let dynamic_params = (1..=g1)
            .map(|g| {
                let r = 2.0 + g as f64;
                DynamicParams {
                    c1: 2.0 * r + 1.0 + g as f64,
                    c2: 2.0 * r + 1.0,
                    radius: r,
                    phase: g as f64 * PI / 3.0,
                }
            })
            .collect();
        let layer_params = (0..n_layers)
            .map(|l| LayerParams {
                offsets: (0..3).map(|q| 1.0 + ((q + l) % 3) as f64).collect(),
                angles: (0..3).map(|q| PI / (q as f64 + 2.0) + 0.1 * l as f64).collect(),
            })
            .collect();
        Self {
            n_groups_dynamic: g1,
            n_groups_layer: 3,
            dynamic_fractions: Some(vec![0.25, 0.2, 0.2, 0.15, 0.1, 0.1]),
            layer_fractions: Some(vec![0.3, 0.4, 0.3]),
            group_of_node: None,
            layer_group_of_node: None,
            dynamic_params,
            layer_params,
            discontinuity: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn check(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.n_groups_dynamic == 0 || self.n_groups_layer == 0 {
            return cfg("group counts must be at least 1".into());
        }
        if self.dynamic_params.len() != self.n_groups_dynamic {
            return cfg(format!(
                "dynamic_params has {} entries, n_groups_dynamic is {}",
                self.dynamic_params.len(),
                self.n_groups_dynamic
            ));
        }
        for (l, lp) in self.layer_params.iter().enumerate() {
            if lp.offsets.len() != self.n_groups_layer || lp.angles.len() != self.n_groups_layer {
                return cfg(format!(
                    "layer_params[{l}] needs {} offsets and angles",
                    self.n_groups_layer
                ));
            }
        }
        if let Some(d) = &self.discontinuity {
            if d.breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
                return cfg("discontinuity breakpoints must be strictly increasing".into());
            }
            if d.multipliers.len() != d.breakpoints.len() + 1 {
                return cfg("discontinuity needs one more multiplier than breakpoints".into());
            }
        }
        Ok(())
    }

    /// Dynamic group label of every node.
    pub fn dynamic_labels(&self, n_nodes: usize) -> Result<Vec<usize>> {
        labels_from(
            self.group_of_node.as_deref(),
            self.dynamic_fractions.as_deref(),
            self.n_groups_dynamic,
            n_nodes,
            "group_of_node",
        )
    }

    /// Layer group label of every node, per layer.
    pub fn layer_labels(&self, n_nodes: usize, n_layers: usize) -> Result<Vec<Vec<usize>>> {
        if let Some(lists) = &self.layer_group_of_node {
            if lists.len() < n_layers {
                return Err(Error::Config(format!(
                    "layer_group_of_node has {} layers, {n_layers} requested",
                    lists.len()
                )));
            }
            return lists
                .iter()
                .take(n_layers)
                .map(|l| labels_from(Some(l), None, self.n_groups_layer, n_nodes, "layer_group_of_node"))
                .collect();
        }
        let fractions = self
            .layer_fractions
            .as_deref()
            .or(if self.n_groups_layer == self.n_groups_dynamic {
                self.dynamic_fractions.as_deref()
            } else {
                None
            });
        let labels = match fractions {
            Some(f) => labels_from(None, Some(f), self.n_groups_layer, n_nodes, "layer_fractions")?,
            None if self.n_groups_layer == self.n_groups_dynamic => self.dynamic_labels(n_nodes)?,
            None => {
                return Err(Error::Config(
                    "layer memberships need layer_fractions or layer_group_of_node".into(),
                ))
            }
        };
        Ok(vec![labels; n_layers])
    }
}

fn labels_from(
    explicit: Option<&[usize]>,
    fractions: Option<&[f64]>,
    groups: usize,
    n_nodes: usize,
    what: &str,
) -> Result<Vec<usize>> {
    if let Some(list) = explicit {
        if list.len() != n_nodes {
            return Err(Error::Config(format!("{what} has {} labels for {n_nodes} nodes", list.len())));
        }
        if let Some(bad) = list.iter().find(|&&g| g >= groups) {
            return Err(Error::Config(format!("{what} label {bad} out of range 0..{groups}")));
        }
        return Ok(list.to_vec());
    }
    match fractions {
        Some(f) => contiguous_assignment(f, n_nodes),
        None => Err(Error::Config(format!("{what}: no fractions or explicit labels given"))),
    }
}

/// Contiguous index blocks: group `g` gets `floor(f_g * n)` nodes in index
/// order and the last group also takes the remainder.
pub fn contiguous_assignment(fractions: &[f64], n_nodes: usize) -> Result<Vec<usize>> {
    if fractions.is_empty() {
        return Err(Error::Config("fractions must be nonempty".into()));
    }
    let total: f64 = fractions.iter().sum();
    if fractions.iter().any(|&f| !(f >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "fractions must be nonnegative and sum to 1, got {fractions:?}"
        )));
    }
    let g = fractions.len();
    let mut labels = Vec::with_capacity(n_nodes);
    for (k, f) in fractions.iter().enumerate().take(g - 1) {
        // tolerate representation error such as 0.4 * 10 = 3.9999...
        let count = (f * n_nodes as f64 + 1e-9).floor() as usize;
        let count = count.min(n_nodes - labels.len());
        labels.extend(std::iter::repeat(k).take(count));
    }
    while labels.len() < n_nodes {
        labels.push(g - 1);
    }
    Ok(labels)
}

fn assemble(spec: &BlockModelSpec, n_nodes: usize, n_layers: usize, with_step: bool) -> Result<LatentModel> {
    spec.check()?;
    if n_nodes == 0 || n_layers == 0 {
        return Err(Error::arg("n_nodes and n_layers must be positive"));
    }
    if spec.layer_params.len() < n_layers {
        return Err(Error::Config(format!(
            "spec defines {} layers, {n_layers} requested",
            spec.layer_params.len()
        )));
    }
    let z = spec.dynamic_labels(n_nodes)?;
    let v = spec.layer_labels(n_nodes, n_layers)?;
    let trajectories = spec
        .dynamic_params
        .iter()
        .map(|p| {
            let step = if with_step {
                spec.discontinuity.as_ref().map(|d| StepFunction {
                    breakpoints: d.breakpoints.clone(),
                    levels: d.multipliers.iter().map(|k| k * p.radius).collect(),
                })
            } else {
                None
            };
            Trajectory::Sinusoid(Sinusoid {
                c1: p.c1,
                c2: p.c2,
                radius: p.radius,
                phase: p.phase,
                step,
            })
        })
        .collect();
    let mut y = Array2::zeros((n_nodes * n_layers, 2));
    for l in 0..n_layers {
        let lp = &spec.layer_params[l];
        for j in 0..n_nodes {
            let q = v[l][j];
            y[[l * n_nodes + j, 0]] = lp.offsets[q] + lp.angles[q].cos();
            y[[l * n_nodes + j, 1]] = lp.offsets[q] + lp.angles[q].sin();
        }
    }
    let model = LatentModel::shared(trajectories, z, n_layers, y)?;
    let report = validate_positivity(&model, DEFAULT_VALIDATION_GRID)?;
    if let Some(v) = report.first_violation {
        return Err(Error::ModelValidity(format!(
            "intensity {} <= 0 at (i={}, j={}, layer={}, t={})",
            v.value, v.source, v.dest, v.layer, v.time
        )));
    }
    Ok(model)
}

pub fn build_smooth_block_model(spec: &BlockModelSpec, n_nodes: usize, n_layers: usize) -> Result<LatentModel> {
    if spec.discontinuity.is_some() {
        return Err(Error::arg(
            "smooth builder got a spec with a discontinuity; use build_discontinuous_block_model",
        ));
    }
    assemble(spec, n_nodes, n_layers, false)
}

pub fn build_discontinuous_block_model(
    spec: &BlockModelSpec,
    n_nodes: usize,
    n_layers: usize,
) -> Result<LatentModel> {
    match &spec.discontinuity {
        None => Err(Error::arg("discontinuous builder needs a discontinuity spec")),
        Some(_) => assemble(spec, n_nodes, n_layers, true),
    }
}

/// Dispatches on whether the spec carries a discontinuity.
pub fn build_block_model(spec: &BlockModelSpec, n_nodes: usize, n_layers: usize) -> Result<LatentModel> {
    if spec.discontinuity.is_some() {
        build_discontinuous_block_model(spec, n_nodes, n_layers)
    } else {
        build_smooth_block_model(spec, n_nodes, n_layers)
    }
}
