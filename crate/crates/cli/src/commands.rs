use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use mippdpg::align::{assumption_diagnostics, recovery_error, AlignmentMode, AssumptionDiagnostics, Truth};
use mippdpg::binning::{bin_events, binned_positions, exact_binned_mean, UnfoldedIntensity};
use mippdpg::clt::{normality_report, studentize, NormalityReport, Side};
use mippdpg::cluster::{agglomerative_cluster, distances_of, normalize_and_smooth, trajectory_distances, upgma};
use mippdpg::embed::{duase, select_dimension, Embedding};
use mippdpg::experiment::{run_sweep, sample_unfolded, SweepConfig, SweepResult};
use mippdpg::io::{
    embedding_from_container, embedding_to_container, read_container, unfolded_from_container, unfolded_to_container,
    write_container, write_matrix_csv, write_matrix_market, Container, ContainerKind,
};
use mippdpg::model::{build_block_model, BlockModelSpec};
use mippdpg::simulate::{ingest_raw_csv, read_events_csv, read_events_jsonl, sample_events, write_events_csv, write_events_jsonl};
use mippdpg::{Error, Result};
use ndarray::{s, Array2, Axis};
use serde::Serialize;
use serde_json::json;

use crate::config::{check_nonempty, check_seeds, Config, DimChoice, InputFormat};
use crate::output::{sha256_hex, Manifest, OutDir};

pub struct Run<'a> {
    pub config: &'a Config,
    pub out: &'a Path,
}

fn manifest(command: &'static str, section: &impl Serialize, model: Option<&BlockModelSpec>, seeds: Vec<u64>) -> Result<Manifest> {
    let cfg = serde_json::to_vec(section).map_err(|e| Error::Data(e.to_string()))?;
    let model_sha256 = match model {
        Some(m) => Some(sha256_hex(m.to_toml()?.as_bytes())),
        None => None,
    };
    Ok(Manifest {
        tool: "mippdpg",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_sha256: sha256_hex(&cfg),
        model_sha256,
        seeds,
        details: BTreeMap::new(),
        outputs: Vec::new(),
    })
}

fn missing(section: &str) -> Error {
    Error::Config(format!("missing [{section}] table (or the equivalent flags)"))
}

fn to_json(v: impl Serialize) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

pub fn simulate(run: &Run) -> Result<()> {
    let cfg = run.config.simulate.as_ref().ok_or_else(|| missing("simulate"))?;
    check_seeds(&cfg.seeds)?;
    let spec = run.config.model_spec(cfg.n_layers)?;
    let model = build_block_model(&spec, cfg.n_nodes, cfg.n_layers)?;
    let mut out = OutDir::create(run.out)?;
    out.write("model.toml", |w| Ok(w.write_all(spec.to_toml()?.as_bytes())?))?;
    let mut counts = BTreeMap::new();
    for &seed in &cfg.seeds {
        let stream = sample_events(&model, seed)?;
        let name = format!("events_seed{seed}.{}", cfg.format.extension());
        out.write(&name, |w| match cfg.format {
            crate::config::EventFormat::Csv => write_events_csv(&stream, w),
            crate::config::EventFormat::Jsonl => write_events_jsonl(&stream, w),
        })?;
        counts.insert(seed.to_string(), stream.len());
    }
    let mut m = manifest("simulate", cfg, Some(&spec), cfg.seeds.clone())?;
    m.details.insert("event_counts".into(), to_json(&counts));
    m.details.insert("n_nodes".into(), json!(cfg.n_nodes));
    m.details.insert("n_layers".into(), json!(cfg.n_layers));
    out.finish(m)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))
}

pub fn embed(run: &Run) -> Result<()> {
    let cfg = run.config.embed.as_ref().ok_or_else(|| missing("embed"))?;
    let input = run.config.resolve(&cfg.input);
    let format = cfg.format.unwrap_or_else(|| InputFormat::guess(&input));
    let mut details = BTreeMap::new();
    let mut names = None;
    let lambda: UnfoldedIntensity<f64> = match format {
        InputFormat::Container => {
            let c = read_container(BufReader::new(open(&input)?))?;
            let u = unfolded_from_container(&c)?;
            if let Some(m) = cfg.n_bins {
                if m != u.n_bins() {
                    return Err(Error::Config(format!("n_bins = {m} but the container has {} bins", u.n_bins())));
                }
            }
            u
        }
        other => {
            let n_bins = cfg
                .n_bins
                .ok_or_else(|| Error::Config("n_bins is required for event input".into()))?;
            let file = BufReader::new(open(&input)?);
            let stream = match other {
                InputFormat::EventsCsv => read_events_csv(file, cfg.n_nodes, cfg.n_layers)?,
                InputFormat::EventsJsonl => read_events_jsonl(file, cfg.n_nodes, cfg.n_layers)?,
                _ => {
                    let ing = ingest_raw_csv(file)?;
                    details.insert("time_map".into(), to_json(ing.time_map));
                    names = Some((ing.node_names, ing.layer_names));
                    ing.stream
                }
            };
            details.insert("events".into(), json!(stream.len()));
            bin_events(&stream, n_bins)?
        }
    };
    let (rows, cols) = lambda.data().dim();
    let spectrum = select_dimension(lambda.data().view(), cfg.k_max.min(rows).min(cols), cfg.min_dim)?;
    let d = match cfg.dim {
        DimChoice::Fixed(d) => d,
        DimChoice::Auto => spectrum.chosen_d,
    };
    if let Some(w) = &spectrum.warning {
        eprintln!("warning: {w}");
    }
    let emb = duase(&lambda, d)?;

    let mut out = OutDir::create(run.out)?;
    out.write("lambda.bin", |w| write_container(w, &unfolded_to_container(&lambda)))?;
    if cfg.matrix_market {
        out.write("lambda.mtx", |w| write_matrix_market(w, lambda.data().view()))?;
    }
    out.write("embedding.bin", |w| write_container(w, &embedding_to_container(&emb)))?;
    let header = |p: &str| (1..=d).map(|k| format!("{p}{k}")).collect::<Vec<_>>();
    out.write("left.csv", |w| write_matrix_csv(w, emb.left.view(), &header("x")))?;
    out.write("right.csv", |w| write_matrix_csv(w, emb.right.view(), &header("y")))?;
    out.write_json("spectrum.json", &spectrum)?;
    if let Some((nodes, layers)) = names {
        out.write("node_names.csv", |w| write_names(w, "node", &nodes))?;
        out.write("layer_names.csv", |w| write_names(w, "layer", &layers))?;
    }
    let mut m = manifest("embed", cfg, None, Vec::new())?;
    m.details = details;
    m.details.insert("input_sha256".into(), json!(sha256_hex(&std::fs::read(&input)?)));
    m.details.insert("dim".into(), json!(d));
    m.details.insert(
        "shape".into(),
        json!({"n_nodes": lambda.n_nodes(), "n_bins": lambda.n_bins(), "n_layers": lambda.n_layers()}),
    );
    out.finish(m)
}

fn write_names(w: &mut dyn Write, what: &str, names: &[String]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["index", what])?;
    for (k, n) in names.iter().enumerate() {
        wtr.write_record([k.to_string(), n.clone()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct DiagnosticsRow {
    n_nodes: usize,
    n_bins: usize,
    diagnostics: AssumptionDiagnostics,
}

#[derive(Serialize)]
struct EvaluateReport<'a> {
    cells: usize,
    failures: usize,
    medians: &'a [mippdpg::experiment::CellMedians],
    slopes: &'a [mippdpg::experiment::SlopeRow],
    diagnostics: Vec<DiagnosticsRow>,
}

/// Returns the number of failed cells.
pub fn evaluate(run: &Run) -> Result<usize> {
    let cfg = run.config.evaluate.as_ref().ok_or_else(|| missing("evaluate"))?;
    check_nonempty("n_nodes", &cfg.n_nodes)?;
    check_nonempty("n_bins", &cfg.n_bins)?;
    check_seeds(&cfg.seeds)?;
    let spec = run.config.model_spec(cfg.n_layers)?;
    // fail fast on an invalid model rather than once per cell
    build_block_model(&spec, cfg.n_nodes[0], cfg.n_layers)?;
    let sweep = SweepConfig {
        n_nodes: cfg.n_nodes.clone(),
        n_bins: cfg.n_bins.clone(),
        n_layers: cfg.n_layers,
        dim: cfg.dim,
        seeds: cfg.seeds.clone(),
        mode: cfg.mode,
        sampler: cfg.sampler,
        sup_points: cfg.sup_points,
    };
    let result = run_sweep(&spec, &sweep)?;
    let mut diagnostics = Vec::new();
    if cfg.diagnostics_grid > 0 {
        for &n in &cfg.n_nodes {
            let model = build_block_model(&spec, n, cfg.n_layers)?;
            for &m in &cfg.n_bins {
                let xt = binned_positions::<f64>(&model, m)?;
                diagnostics.push(DiagnosticsRow {
                    n_nodes: n,
                    n_bins: m,
                    diagnostics: assumption_diagnostics(&xt, model.layer_positions().view(), &model, cfg.diagnostics_grid)?,
                });
            }
        }
    }
    let mut out = OutDir::create(run.out)?;
    out.write("cells.csv", |w| write_cells(w, &result))?;
    out.write("medians.csv", |w| {
        let mut wtr = csv::Writer::from_writer(w);
        for r in &result.medians {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    })?;
    out.write("slopes.csv", |w| write_slopes(w, &result))?;
    out.write_json(
        "report.json",
        &EvaluateReport {
            cells: result.cells.len(),
            failures: result.failures(),
            medians: &result.medians,
            slopes: &result.slopes,
            diagnostics,
        },
    )?;
    let m = manifest("evaluate", cfg, Some(&spec), cfg.seeds.clone())?;
    out.finish(m)?;
    for c in result.cells.iter().filter(|c| c.failure.is_some()) {
        eprintln!(
            "cell N={} M={} seed={} failed: {}",
            c.n_nodes,
            c.n_bins,
            c.seed,
            c.failure.as_deref().unwrap_or_default()
        );
    }
    Ok(result.failures())
}

fn write_cells(w: &mut dyn Write, r: &SweepResult) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "n_nodes",
        "n_bins",
        "n_layers",
        "dim",
        "seed",
        "mode",
        "x_error",
        "y_error",
        "continuous_error",
        "bias",
        "failure",
    ])?;
    for c in &r.cells {
        let mode = match c.mode {
            AlignmentMode::ProcrustesGlobal => "procrustes-global",
            AlignmentMode::ProcrustesPerBin => "procrustes-per-bin",
            AlignmentMode::AppendixW => "appendix-w",
        };
        wtr.write_record([
            c.n_nodes.to_string(),
            c.n_bins.to_string(),
            c.n_layers.to_string(),
            c.dim.to_string(),
            c.seed.to_string(),
            mode.to_string(),
            c.x_error.to_string(),
            c.y_error.to_string(),
            c.continuous_error.to_string(),
            c.bias.to_string(),
            c.failure.clone().unwrap_or_default(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn write_slopes(w: &mut dyn Write, r: &SweepResult) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["n_bins", "target", "slope", "intercept", "r_squared", "points"])?;
    for row in &r.slopes {
        for (target, fit) in [("x_error", row.x_fit), ("y_error", row.y_fit)] {
            let cols = match fit {
                Some(f) => [f.slope.to_string(), f.intercept.to_string(), f.r_squared.to_string(), f.points.to_string()],
                None => Default::default(),
            };
            wtr.write_record([row.n_bins.to_string(), target.to_string()].into_iter().chain(cols))?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CltReport {
    pooled: NormalityReport,
    per_seed: BTreeMap<String, NormalityReport>,
}

pub fn clt(run: &Run) -> Result<()> {
    let cfg = run.config.clt.as_ref().ok_or_else(|| missing("clt"))?;
    check_seeds(&cfg.seeds)?;
    let spec = run.config.model_spec(cfg.n_layers)?;
    let model = build_block_model(&spec, cfg.n_nodes, cfg.n_layers)?;
    let truth = Truth::new(&model, cfg.n_bins)?;
    let mut pooled: Vec<Array2<f64>> = Vec::new();
    let mut per_seed = BTreeMap::new();
    let mut rows: Vec<(u64, usize, usize, Vec<f64>)> = Vec::new();
    for &seed in &cfg.seeds {
        let lambda = if cfg.noiseless {
            exact_binned_mean::<f64>(&model, cfg.n_bins)?.0
        } else {
            sample_unfolded(&model, cfg.n_bins, seed, cfg.sampler)?
        };
        let emb = duase(&lambda, cfg.dim)?;
        let align = recovery_error(&emb, &truth, AlignmentMode::AppendixW, mippdpg::align::DEFAULT_SUP_POINTS)?;
        let z = studentize(&emb, &truth, &align, cfg.side, cfg.scaling)?;
        per_seed.insert(seed.to_string(), normality_report(z.z.view())?);
        for (k, &(i, b)) in z.index.iter().enumerate() {
            rows.push((seed, i, b, z.z.row(k).to_vec()));
        }
        pooled.push(z.z);
    }
    let views: Vec<_> = pooled.iter().map(|a| a.view()).collect();
    let all = ndarray::concatenate(Axis(0), &views).map_err(|e| Error::Numerical(e.to_string()))?;
    let report = CltReport {
        pooled: normality_report(all.view())?,
        per_seed,
    };
    if report.pooled.degenerate {
        eprintln!("warning: residuals are degenerate (zero variance); is the input noiseless?");
    }
    let block = match cfg.side {
        Side::Left => "bin",
        Side::Right => "layer",
    };
    let mut out = OutDir::create(run.out)?;
    out.write("residuals.csv", |w| {
        let mut wtr = csv::Writer::from_writer(w);
        let mut head = vec!["seed".to_string(), "node".to_string(), block.to_string()];
        head.extend((1..=cfg.dim).map(|k| format!("z{k}")));
        wtr.write_record(&head)?;
        for (seed, i, b, z) in &rows {
            let mut rec = vec![seed.to_string(), i.to_string(), b.to_string()];
            rec.extend(z.iter().map(|x| x.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    })?;
    out.write_json("normality.json", &report)?;
    let mut m = manifest("clt", cfg, Some(&spec), cfg.seeds.clone())?;
    m.details.insert("degenerate".into(), json!(report.pooled.degenerate));
    out.finish(m)
}

pub fn cluster(run: &Run) -> Result<()> {
    let cfg = run.config.cluster.as_ref().ok_or_else(|| missing("cluster"))?;
    let path = run.config.resolve(&cfg.embedding);
    let container = read_container(BufReader::new(open(&path)?))?;
    let emb: Embedding<f64> = embedding_from_container(&container)?;
    let n = emb.n_nodes;
    let dist = match cfg.layer {
        Some(l) => {
            if l >= emb.n_layers {
                return Err(Error::Config(format!("layer {l} out of range 0..{}", emb.n_layers)));
            }
            let rows = emb.right.slice(s![l * n..(l + 1) * n, ..]);
            let points: Vec<Array2<f64>> = rows.rows().into_iter().map(|r| r.to_owned().insert_axis(Axis(0))).collect();
            distances_of(&points)?
        }
        None => trajectory_distances(&normalize_and_smooth(emb.left.view(), n, emb.n_bins, cfg.window)?)?,
    };
    let (labels, tree) = match cfg.k {
        Some(k) => agglomerative_cluster(dist.view(), k)?,
        None => {
            let tree = upgma(dist.view())?;
            (tree.cut(tree.largest_gap_k())?, tree)
        }
    };
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut out = OutDir::create(run.out)?;
    out.write("labels.csv", |w| {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["node", "label"])?;
        for (i, l) in labels.iter().enumerate() {
            wtr.write_record([i.to_string(), l.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    })?;
    out.write("merges.csv", |w| {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["step", "left", "right", "height", "size"])?;
        for (s, m) in tree.merges.iter().enumerate() {
            wtr.write_record([s.to_string(), m.left.to_string(), m.right.to_string(), m.height.to_string(), m.size.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    })?;
    out.write("distances.bin", |w| {
        write_container(
            w,
            &Container {
                kind: ContainerKind::Distance,
                n_nodes: n as u64,
                n_bins: emb.n_bins as u64,
                n_layers: emb.n_layers as u64,
                dim: emb.dim() as u64,
                sections: vec![dist.clone()],
            },
        )
    })?;
    let mut m = manifest("cluster", cfg, None, Vec::new())?;
    m.details.insert("input_sha256".into(), json!(sha256_hex(&std::fs::read(&path)?)));
    m.details.insert("clusters".into(), json!(k));
    out.finish(m)
}
