//! TOML experiment configuration. One file can carry the settings of every
//! subcommand; each subcommand reads its own table plus `[model]`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use mippdpg::align::{AlignmentMode, DEFAULT_SUP_POINTS};
use mippdpg::clt::{CltScaling, Side};
use mippdpg::experiment::Sampler;
use mippdpg::model::BlockModelSpec;
use mippdpg::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: Option<toml::Table>,
    pub simulate: Option<SimulateConfig>,
    pub embed: Option<EmbedConfig>,
    pub evaluate: Option<EvaluateConfig>,
    pub clt: Option<CltConfig>,
    pub cluster: Option<ClusterConfig>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventFormat {
    #[default]
    Csv,
    Jsonl,
}

impl EventFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub n_nodes: usize,
    pub n_layers: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub format: EventFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    /// `src,dst,layer,time` with integer indices.
    EventsCsv,
    EventsJsonl,
    /// `src,dst,layer,time` with arbitrary names and raw timestamps.
    RawCsv,
    /// Binary container holding an unfolded matrix.
    Container,
}

impl InputFormat {
    pub fn guess(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") => Self::EventsJsonl,
            Some("bin") => Self::Container,
            _ => Self::EventsCsv,
        }
    }
}

/// `dim = 3` or `dim = "auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(try_from = "toml::Value", into = "toml::Value")]
pub enum DimChoice {
    Fixed(usize),
    Auto,
}

impl TryFrom<toml::Value> for DimChoice {
    type Error = String;
    fn try_from(v: toml::Value) -> std::result::Result<Self, String> {
        match v {
            toml::Value::Integer(k) if k >= 1 => Ok(Self::Fixed(k as usize)),
            toml::Value::String(s) => s.parse(),
            other => Err(format!("dim must be a positive integer or \"auto\", got {other}")),
        }
    }
}

impl From<DimChoice> for toml::Value {
    fn from(d: DimChoice) -> Self {
        match d {
            DimChoice::Fixed(k) => toml::Value::Integer(k as i64),
            DimChoice::Auto => toml::Value::String("auto".into()),
        }
    }
}

impl std::str::FromStr for DimChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Self::Fixed(k)),
            _ => Err(format!("dim must be a positive integer or \"auto\", got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedConfig {
    pub input: PathBuf,
    pub format: Option<InputFormat>,
    /// Required for event input; taken from the container otherwise.
    pub n_bins: Option<usize>,
    pub dim: DimChoice,
    #[serde(default = "one")]
    pub min_dim: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    pub n_nodes: Option<usize>,
    pub n_layers: Option<usize>,
    #[serde(default)]
    pub matrix_market: bool,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub n_nodes: Vec<usize>,
    pub n_bins: Vec<usize>,
    pub n_layers: usize,
    #[serde(default = "two")]
    pub dim: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub mode: AlignmentMode,
    #[serde(default)]
    pub sampler: Sampler,
    #[serde(default = "default_sup_points")]
    pub sup_points: usize,
    /// Grid size for the Lipschitz diagnostics; `0` skips them.
    #[serde(default = "default_grid")]
    pub diagnostics_grid: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CltConfig {
    pub n_nodes: usize,
    pub n_bins: usize,
    pub n_layers: usize,
    #[serde(default = "two")]
    pub dim: usize,
    pub seeds: Vec<u64>,
    #[serde(default = "left")]
    pub side: Side,
    #[serde(default)]
    pub scaling: CltScaling,
    #[serde(default)]
    pub sampler: Sampler,
    /// Embed the exact bin means instead of a sample.
    #[serde(default)]
    pub noiseless: bool,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub embedding: PathBuf,
    /// Cut height from the largest merge-height ratio when absent.
    pub k: Option<usize>,
    #[serde(default = "five")]
    pub window: usize,
    /// Cluster the right-factor rows of this layer instead of trajectories.
    pub layer: Option<usize>,
}

fn one() -> usize {
    1
}
fn two() -> usize {
    2
}
fn five() -> usize {
    5
}
fn left() -> Side {
    Side::Left
}
fn default_k_max() -> usize {
    mippdpg::embed::DEFAULT_SPECTRUM_LEN
}
fn default_sup_points() -> usize {
    DEFAULT_SUP_POINTS
}
fn default_grid() -> usize {
    100
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: Config = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// `[model]` is either `preset = "smooth" | "discontinuous" | "standin"`,
    /// `path = "model.toml"`, or the model fields inline. Absent means
    /// `smooth`.
    pub fn model_spec(&self, n_layers: usize) -> Result<BlockModelSpec> {
        let Some(table) = &self.model else {
            return Ok(BlockModelSpec::smooth_default());
        };
        if let Some(p) = table.get("preset") {
            if table.len() != 1 {
                return Err(Error::Config("[model] preset excludes other keys".into()));
            }
            return match p.as_str() {
                Some("smooth") => Ok(BlockModelSpec::smooth_default()),
                Some("discontinuous") => Ok(BlockModelSpec::discontinuous_default()),
                Some("standin") => Ok(BlockModelSpec::standin(n_layers)),
                _ => Err(Error::Config(format!("unknown model preset {p}"))),
            };
        }
        if let Some(p) = table.get("path") {
            if table.len() != 1 {
                return Err(Error::Config("[model] path excludes other keys".into()));
            }
            let path = self.resolve(Path::new(p.as_str().ok_or_else(|| Error::Config("model path must be a string".into()))?));
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Config(format!("cannot read model {}: {e}", path.display())))?;
            return BlockModelSpec::from_toml(&text);
        }
        toml::Value::Table(table.clone())
            .try_into()
            .map_err(|e| Error::Config(format!("[model]: {e}")))
    }
}

pub fn check_seeds(seeds: &[u64]) -> Result<()> {
    if seeds.is_empty() {
        return Err(Error::Config("seed list is empty".into()));
    }
    if seeds.iter().collect::<BTreeSet<_>>().len() != seeds.len() {
        return Err(Error::Config("seeds must be distinct".into()));
    }
    Ok(())
}

pub fn check_nonempty<T>(what: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        Err(Error::Config(format!("{what} list is empty")))
    } else {
        Ok(())
    }
}
