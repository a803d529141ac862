//! `mippdpg` command-line runner.
//!
//! Exit codes: 0 ok, 2 configuration, 3 model validity, 4 data,
//! 5 numerical (including failed sweep cells).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mippdpg::Error;

mod commands;
mod config;
mod output;

use config::{ClusterConfig, Config, DimChoice, EmbedConfig, InputFormat, SimulateConfig};

#[derive(Parser, Debug)]
#[command(name = "mippdpg", version, about = "Simulate, embed and evaluate multiplex Poisson dot-product graphs")]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Replaces the configured seed list with this single seed (default 0
    /// when `simulate` runs from flags alone).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true, env = "MIPPDPG_THREADS")]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample event streams from the configured model, one file per seed.
    Simulate(SimulateArgs),
    /// Bin events (or load a binned matrix) and compute the spectral embedding.
    Embed(EmbedArgs),
    /// Recovery-error sweep over N, M and seeds.
    Evaluate,
    /// Studentized residuals and their normality report.
    Clt,
    /// Agglomerative clustering of an embedding.
    Cluster(ClusterArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    /// Event file or binary container.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<InputFormat>,
    #[arg(long)]
    bins: Option<usize>,
    /// Embedding dimension or `auto`.
    #[arg(long)]
    dim: Option<DimChoice>,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[arg(long)]
    embedding: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    layer: Option<usize>,
}

fn parse_format(s: &str) -> Result<InputFormat, String> {
    toml::Value::String(s.to_owned())
        .try_into()
        .map_err(|_| format!("unknown format '{s}' (events-csv, events-jsonl, raw-csv, container)"))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Argument(_) => 2,
        Error::ModelValidity(_) => 3,
        Error::Data(_) | Error::Io(_) => 4,
        Error::Numerical(_) | Error::RankDeficient(_) => 5,
    }
}

fn apply_overrides(cli: &Cli, cfg: &mut Config) -> Result<(), Error> {
    let seeds = cli.seed.map(|s| vec![s]);
    match &cli.command {
        Command::Simulate(a) => {
            if cfg.simulate.is_none() {
                if let (Some(n), Some(l)) = (a.nodes, a.layers) {
                    cfg.simulate = Some(SimulateConfig {
                        n_nodes: n,
                        n_layers: l,
                        // without a config the single seed is 0 unless --seed says otherwise
                        seeds: vec![0],
                        format: Default::default(),
                    });
                }
            }
            if let Some(s) = cfg.simulate.as_mut() {
                s.n_nodes = a.nodes.unwrap_or(s.n_nodes);
                s.n_layers = a.layers.unwrap_or(s.n_layers);
                if let Some(seeds) = seeds {
                    s.seeds = seeds;
                }
            }
        }
        Command::Embed(a) => {
            if cfg.embed.is_none() {
                if let Some(input) = &a.input {
                    cfg.embed = Some(EmbedConfig {
                        input: input.clone(),
                        format: None,
                        n_bins: None,
                        dim: DimChoice::Auto,
                        min_dim: 1,
                        k_max: mippdpg::embed::DEFAULT_SPECTRUM_LEN,
                        n_nodes: None,
                        n_layers: None,
                        matrix_market: false,
                    });
                }
            }
            if let Some(e) = cfg.embed.as_mut() {
                if let Some(i) = &a.input {
                    e.input = i.clone();
                }
                e.format = a.format.or(e.format);
                e.n_bins = a.bins.or(e.n_bins);
                e.dim = a.dim.unwrap_or(e.dim);
            }
        }
        Command::Evaluate => {
            if let (Some(e), Some(seeds)) = (cfg.evaluate.as_mut(), seeds) {
                e.seeds = seeds;
            }
        }
        Command::Clt => {
            if let (Some(c), Some(seeds)) = (cfg.clt.as_mut(), seeds) {
                c.seeds = seeds;
            }
        }
        Command::Cluster(a) => {
            if cfg.cluster.is_none() {
                if let Some(e) = &a.embedding {
                    cfg.cluster = Some(ClusterConfig {
                        embedding: e.clone(),
                        k: None,
                        window: 5,
                        layer: None,
                    });
                }
            }
            if let Some(c) = cfg.cluster.as_mut() {
                if let Some(e) = &a.embedding {
                    c.embedding = e.clone();
                }
                c.k = a.k.or(c.k);
                c.window = a.window.unwrap_or(c.window);
                c.layer = a.layer.or(c.layer);
            }
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    apply_overrides(cli, &mut cfg)?;
    let r = commands::Run {
        config: &cfg,
        out: &cli.out,
    };
    match cli.command {
        Command::Simulate(_) => commands::simulate(&r),
        Command::Embed(_) => commands::embed(&r),
        Command::Evaluate => {
            let failed = commands::evaluate(&r)?;
            if failed > 0 {
                return Err(Error::Numerical(format!("{failed} sweep cell(s) failed; see cells.csv")));
            }
            Ok(())
        }
        Command::Clt => commands::clt(&r),
        Command::Cluster(_) => commands::cluster(&r),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
