//! Event streams: sampling by thinning, the per-bin count sampler, and
//! CSV/JSONL serialization.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::{IntensityKind, UnfoldedIntensity};
use crate::error::{Error, Result};
use crate::model::{validate_positivity, LatentModel, DEFAULT_VALIDATION_GRID};
use crate::scalar::Scalar;

/// Grid size for the thinning bound when no exact supremum is available.
pub const THINNING_GRID: usize = 256;
/// Safety factor applied to the grid supremum.
pub const THINNING_SAFETY: f64 = 1.1;
/// Relative slack on an exact supremum, covering rounding in its evaluation.
const EXACT_SUP_SLACK: f64 = 1e-9;

/// One event `(i, j, l, t)` on the window `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub src: usize,
    pub dst: usize,
    pub layer: usize,
    pub time: f64,
}

fn event_order(a: &Event, b: &Event) -> std::cmp::Ordering {
    a.time
        .total_cmp(&b.time)
        .then(a.src.cmp(&b.src))
        .then(a.dst.cmp(&b.dst))
        .then(a.layer.cmp(&b.layer))
}

/// Time-ordered events of a multiplex network.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    events: Vec<Event>,
    n_nodes: usize,
    n_layers: usize,
    seed: Option<u64>,
}

impl EventStream {
    /// Validates indices and times, then sorts by `(time, src, dst, layer)`.
    pub fn new(mut events: Vec<Event>, n_nodes: usize, n_layers: usize, seed: Option<u64>) -> Result<Self> {
        for (k, e) in events.iter().enumerate() {
            if e.src >= n_nodes || e.dst >= n_nodes || e.layer >= n_layers {
                return Err(Error::data(format!(
                    "event {k} ({}, {}, {}, {}) has an index out of range for N={n_nodes}, L={n_layers}",
                    e.src, e.dst, e.layer, e.time
                )));
            }
            if !(e.time > 0.0 && e.time <= 1.0) {
                return Err(Error::data(format!(
                    "event {k} ({}, {}, {}, {}) has a time outside (0, 1]",
                    e.src, e.dst, e.layer, e.time
                )));
            }
        }
        events.sort_by(event_order);
        Ok(Self {
            events,
            n_nodes,
            n_layers,
            seed,
        })
    }

    #[cfg(test)]
    pub(crate) fn unchecked(events: Vec<Event>, n_nodes: usize, n_layers: usize) -> Self {
        Self {
            events,
            n_nodes,
            n_layers,
            seed: None,
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Number of events on `(i, j, l)` with time in `(a, b]`.
    pub fn count(&self, i: usize, j: usize, layer: usize, a: f64, b: f64) -> usize {
        self.events
            .iter()
            .filter(|e| e.src == i && e.dst == j && e.layer == layer && e.time > a && e.time <= b)
            .count()
    }
}

/// Index of the random stream used for edge `(i, j, l)`.
pub fn edge_stream(n_nodes: usize, n_layers: usize, i: usize, j: usize, layer: usize) -> u64 {
    ((i * n_nodes + j) * n_layers + layer) as u64
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Event times of one inhomogeneous Poisson process by thinning.
///
/// `segments` are `(a, b, bound)` triples on which `bound >= sup lambda`.
/// A proposal where `lambda` exceeds its bound is an error.
pub fn sample_edge_times<R: Rng + ?Sized>(
    lambda: impl Fn(f64) -> f64,
    segments: &[(f64, f64, f64)],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for &(a, b, bound) in segments {
        if !(b > a) || bound <= 0.0 {
            continue;
        }
        if !bound.is_finite() {
            return Err(Error::numerical(format!("thinning bound {bound} on ({a}, {b}] is not finite")));
        }
        let gap = Exp::new(bound).map_err(|e| Error::numerical(e.to_string()))?;
        let mut t = a;
        loop {
            t += gap.sample(rng);
            if t > b {
                break;
            }
            let u: f64 = rng.gen();
            if t <= a {
                continue;
            }
            let v = lambda(t);
            if v > bound {
                return Err(Error::numerical(format!(
                    "thinning bound {bound} exceeded by intensity {v} at t={t}"
                )));
            }
            if u * bound < v {
                out.push(t);
            }
        }
    }
    Ok(out)
}

/// Thinning segments for edge `(i, j, l)`: one per continuity piece of
/// `X_i`.
fn edge_segments(model: &LatentModel, i: usize, j: usize, layer: usize) -> Vec<(f64, f64, f64)> {
    let traj = model.trajectory(i);
    let y: Vec<f64> = model.layer_position(layer, j).to_vec();
    let mut cuts = vec![0.0];
    cuts.extend(traj.breakpoints());
    cuts.push(1.0);
    cuts.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let bound = match traj.exact_sup_inner(&y, a, b) {
                Some(s) => s + EXACT_SUP_SLACK * s.abs(),
                None => {
                    let mut sup = f64::NEG_INFINITY;
                    for k in 0..THINNING_GRID {
                        // grid on (a, b], right endpoint included
                        let t = a + (b - a) * (k + 1) as f64 / THINNING_GRID as f64;
                        sup = sup.max(model.intensity_unchecked(i, j, layer, t));
                    }
                    sup * THINNING_SAFETY
                }
            };
            (a, b, bound)
        })
        .collect()
}

/// Samples every `(i, j, l)` process independently and merges the events.
///
/// Each edge draws from its own ChaCha8 stream (`seed`, stream index from
/// [`edge_stream`]), so the output does not depend on the number of worker
/// threads.
pub fn sample_events(model: &LatentModel, seed: u64) -> Result<EventStream> {
    let report = validate_positivity(model, DEFAULT_VALIDATION_GRID)?;
    if let Some(v) = report.first_violation {
        return Err(Error::ModelValidity(format!(
            "intensity {} <= 0 at (i={}, j={}, layer={}, t={})",
            v.value, v.source, v.dest, v.layer, v.time
        )));
    }
    let (n, l) = (model.n_nodes(), model.n_layers());
    let per_edge: Vec<Vec<Event>> = (0..n * n * l)
        .into_par_iter()
        .map(|e| {
            let layer = e % l;
            let j = (e / l) % n;
            let i = e / (l * n);
            let mut rng = rng_for(seed, edge_stream(n, l, i, j, layer));
            let segments = edge_segments(model, i, j, layer);
            let times = sample_edge_times(|t| model.intensity_unchecked(i, j, layer, t), &segments, &mut rng)?;
            Ok(times
                .into_iter()
                .map(|time| Event { src: i, dst: j, layer, time })
                .collect())
        })
        .collect::<Result<_>>()?;
    let events: Vec<Event> = per_edge.into_iter().flatten().collect();
    EventStream::new(events, n, l, Some(seed))
}

/// `int_a^b lambda_{lij}(u) du`.
pub fn integrated_intensity(model: &LatentModel, i: usize, j: usize, layer: usize, a: f64, b: f64) -> Result<f64> {
    model.integrated_intensity(i, j, layer, a, b)
}

/// Draws a histogram estimate directly from bin counts.
///
/// Counts of a Poisson process on disjoint bins are independent Poisson
/// variables with mean `int_{B_m} lambda`, so `M * Poisson(lambda_bar / M)`
/// per entry has exactly the law of binning a full event stream, without
/// materializing the events. Each row uses its own random stream.
pub fn sample_binned<T: Scalar>(mean: &UnfoldedIntensity<f64>, seed: u64) -> Result<UnfoldedIntensity<T>> {
    if mean.kind() != IntensityKind::ExactMean {
        return Err(Error::arg("sample_binned needs an exact-mean matrix"));
    }
    let m = mean.n_bins() as f64;
    let data = mean.data();
    let (rows, cols) = data.dim();
    let rows_out: Vec<Vec<T>> = (0..rows)
        .into_par_iter()
        .map(|r| -> Result<Vec<T>> {
            let mut rng = rng_for(seed, r as u64);
            (0..cols)
                .map(|c| {
                    let mu = data[[r, c]] / m;
                    let count = if mu > 0.0 {
                        Poisson::new(mu).map_err(|e| Error::numerical(e.to_string()))?.sample(&mut rng)
                    } else if mu == 0.0 {
                        0.0
                    } else {
                        return Err(Error::ModelValidity(format!("negative mean {mu} at entry ({r}, {c})")));
                    };
                    Ok(T::lit(count * m))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let flat: Vec<T> = rows_out.into_iter().flatten().collect();
    let out = Array2::from_shape_vec((rows, cols), flat).map_err(|e| Error::numerical(e.to_string()))?;
    UnfoldedIntensity::new(out, mean.n_nodes(), mean.n_bins(), mean.n_layers(), IntensityKind::Empirical)
}

pub const CSV_HEADER: [&str; 4] = ["src", "dst", "layer", "time"];

/// Writes `src,dst,layer,time` rows; times use the shortest decimal that
/// parses back to the same `f64`.
pub fn write_events_csv<W: Write>(stream: &EventStream, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    for e in &stream.events {
        wtr.write_record(&[e.src.to_string(), e.dst.to_string(), e.layer.to_string(), e.time.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_events_jsonl<W: Write>(stream: &EventStream, mut w: W) -> Result<()> {
    for e in &stream.events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn shape_of(events: &[Event], n_nodes: Option<usize>, n_layers: Option<usize>) -> (usize, usize) {
    let n = n_nodes.unwrap_or_else(|| events.iter().map(|e| e.src.max(e.dst) + 1).max().unwrap_or(1));
    let l = n_layers.unwrap_or_else(|| events.iter().map(|e| e.layer + 1).max().unwrap_or(1));
    (n, l)
}

fn report_bad_lines(bad: Vec<(usize, String)>) -> Error {
    let lines: Vec<String> = bad.iter().take(20).map(|(n, m)| format!("line {n}: {m}")).collect();
    let more = if bad.len() > 20 {
        format!(" (and {} more)", bad.len() - 20)
    } else {
        String::new()
    };
    Error::data(format!("{} malformed rows: {}{more}", bad.len(), lines.join("; ")))
}

/// Reads the CSV written by [`write_events_csv`].
///
/// `N` and `L` default to one more than the largest index seen. Every
/// malformed row is collected and reported with its line number.
pub fn read_events_csv<R: std::io::Read>(r: R, n_nodes: Option<usize>, n_layers: Option<usize>) -> Result<EventStream> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::data(format!("expected header src,dst,layer,time, found {}", header.join(","))));
    }
    let mut events = Vec::new();
    let mut bad = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                bad.push((line, e.to_string()));
                continue;
            }
        };
        match parse_record(&rec) {
            Ok(e) if e.time > 0.0 && e.time <= 1.0 => events.push(e),
            Ok(e) => bad.push((line, format!("time {} outside (0, 1]", e.time))),
            Err(m) => bad.push((line, m)),
        }
    }
    if !bad.is_empty() {
        return Err(report_bad_lines(bad));
    }
    let (n, l) = shape_of(&events, n_nodes, n_layers);
    EventStream::new(events, n, l, None)
}

fn parse_record(rec: &csv::StringRecord) -> std::result::Result<Event, String> {
    if rec.len() != 4 {
        return Err(format!("expected 4 fields, found {}", rec.len()));
    }
    let idx = |k: usize| rec[k].parse::<usize>().map_err(|_| format!("bad {} '{}'", CSV_HEADER[k], &rec[k]));
    let time = rec[3].parse::<f64>().map_err(|_| format!("bad time '{}'", &rec[3]))?;
    Ok(Event {
        src: idx(0)?,
        dst: idx(1)?,
        layer: idx(2)?,
        time,
    })
}

pub fn read_events_jsonl<R: BufRead>(r: R, n_nodes: Option<usize>, n_layers: Option<usize>) -> Result<EventStream> {
    let mut events = Vec::new();
    let mut bad = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Event>(&line) {
            Ok(e) if e.time > 0.0 && e.time <= 1.0 => events.push(e),
            Ok(e) => bad.push((k + 1, format!("time {} outside (0, 1]", e.time))),
            Err(e) => bad.push((k + 1, e.to_string())),
        }
    }
    if !bad.is_empty() {
        return Err(report_bad_lines(bad));
    }
    let (n, l) = shape_of(&events, n_nodes, n_layers);
    EventStream::new(events, n, l, None)
}

/// Affine map taking raw timestamps onto `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeMap {
    pub t_min: f64,
    pub t_max: f64,
}

impl TimeMap {
    /// Image of `t`. `t_min` would land on 0, which is outside the window,
    /// so it is nudged up by half an ulp of 1. A degenerate range maps
    /// everything to 1.
    pub fn apply(&self, t: f64) -> f64 {
        let span = self.t_max - self.t_min;
        if !(span > 0.0) {
            return 1.0;
        }
        let u = ((t - self.t_min) / span).min(1.0);
        if u <= 0.0 {
            f64::EPSILON / 2.0
        } else {
            u
        }
    }
}

/// Result of reading a stream with named nodes and layers.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub stream: EventStream,
    /// Index `k` is the name of node `k`; names are sorted.
    pub node_names: Vec<String>,
    pub layer_names: Vec<String>,
    pub time_map: TimeMap,
}

/// Reads `src,dst,layer,time` where the first three columns are arbitrary
/// labels and `time` is any real number.
///
/// Labels are indexed in sorted order so that the result does not depend on
/// row order; times go through [`TimeMap`].
pub fn ingest_raw_csv<R: std::io::Read>(r: R) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::data(format!("expected header src,dst,layer,time, found {}", header.join(","))));
    }
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        match rec {
            Err(e) => bad.push((line, e.to_string())),
            Ok(rec) if rec.len() != 4 => bad.push((line, format!("expected 4 fields, found {}", rec.len()))),
            Ok(rec) => match rec[3].parse::<f64>() {
                Ok(t) if t.is_finite() => rows.push((rec[0].to_owned(), rec[1].to_owned(), rec[2].to_owned(), t)),
                _ => bad.push((line, format!("bad time '{}'", &rec[3]))),
            },
        }
    }
    if !bad.is_empty() {
        return Err(report_bad_lines(bad));
    }
    let mut nodes = BTreeMap::new();
    let mut layers = BTreeMap::new();
    for (s, d, l, _) in &rows {
        nodes.insert(s.clone(), 0usize);
        nodes.insert(d.clone(), 0usize);
        layers.insert(l.clone(), 0usize);
    }
    for (k, v) in nodes.values_mut().enumerate() {
        *v = k;
    }
    for (k, v) in layers.values_mut().enumerate() {
        *v = k;
    }
    let t_min = rows.iter().map(|r| r.3).fold(f64::INFINITY, f64::min);
    let t_max = rows.iter().map(|r| r.3).fold(f64::NEG_INFINITY, f64::max);
    let time_map = TimeMap { t_min, t_max };
    let events = rows
        .iter()
        .map(|(s, d, l, t)| Event {
            src: nodes[s],
            dst: nodes[d],
            layer: layers[l],
            time: time_map.apply(*t),
        })
        .collect();
    let stream = EventStream::new(events, nodes.len().max(1), layers.len().max(1), None)?;
    Ok(Ingested {
        stream,
        node_names: nodes.into_keys().collect(),
        layer_names: layers.into_keys().collect(),
        time_map,
    })
}
