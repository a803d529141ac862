// Named to sort before `acceptance`: cargo stops at the first failing test
// binary, and the acceptance target fails whenever a criterion does.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mippdpg"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn empty_seed_list_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[evaluate]\nn_nodes = [20]\nn_bins = [4]\nn_layers = 2\nseeds = []\n",
    );
    let o = run(&["--config", s(&cfg), "--out", s(&dir.path().join("o")), "evaluate"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("seed"));
}

#[test]
fn unknown_keys_and_zero_threads_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.toml", "[simulate]\nn_nodes = 5\nn_layers = 1\nseeds = [1]\nbogus = 3\n");
    let o = run(&["--config", s(&cfg), "simulate"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = run(&["--threads", "0", "--out", s(&dir.path().join("o")), "simulate", "--nodes", "3", "--layers", "1"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn negative_intensity_is_a_model_error() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("[model]\nn_groups_dynamic = 1\nn_groups_layer = 1\ndynamic_fractions = [1.0]\n");
    text += "[[model.dynamic_params]]\nc1 = -50.0\nc2 = 1.0\nradius = 1.0\nphase = 0.0\n";
    text += "[[model.layer_params]]\noffsets = [1.0]\nangles = [0.0]\n";
    text += "[simulate]\nn_nodes = 4\nn_layers = 1\nseeds = [1]\n";
    let cfg = write(dir.path(), "c.toml", &text);
    let o = run(&["--config", s(&cfg), "--out", s(&dir.path().join("o")), "simulate"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn malformed_rows_are_data_errors_with_line_numbers() {
    let dir = TempDir::new().unwrap();
    let ev = write(dir.path(), "e.csv", "src,dst,layer,time\n0,1,0,0.5\n0,x,0,0.2\n1,1,0,1.5\n");
    let o = run(&["--out", s(&dir.path().join("o")), "embed", "--input", s(&ev), "--bins", "2", "--dim", "1"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("line 3") && err.contains("line 4"), "{err}");
}

#[test]
fn simulate_writes_headed_csv_and_manifest() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sim");
    let o = run(&["--seed", "4", "--out", s(&out), "simulate", "--nodes", "5", "--layers", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(out.join("events_seed4.csv")).unwrap();
    assert!(text.starts_with("src,dst,layer,time\n"));
    assert!(text.lines().count() > 100);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"], serde_json::json!([4]));
    assert!(out.join("model.toml").exists());
}

#[test]
fn single_event_with_one_bin_and_one_dimension() {
    let dir = TempDir::new().unwrap();
    let ev = write(dir.path(), "e.csv", "src,dst,layer,time\n0,0,0,0.25\n");
    let out = dir.path().join("o");
    let o = run(&["--out", s(&out), "embed", "--input", s(&ev), "--bins", "1", "--dim", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let left = fs::read_to_string(out.join("left.csv")).unwrap();
    let mut lines = left.lines();
    assert_eq!(lines.next(), Some("x1"));
    assert_eq!(lines.next().unwrap().parse::<f64>().unwrap(), 1.0);
}

#[test]
fn embedding_a_saved_matrix_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let sim = dir.path().join("sim");
    assert_eq!(code(&run(&["--out", s(&sim), "simulate", "--nodes", "12", "--layers", "2"])), 0);
    let a = dir.path().join("a");
    let o = run(&["--out", s(&a), "embed", "--input", s(&sim.join("events_seed0.csv")), "--bins", "5", "--dim", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let b = dir.path().join("b");
    let o = run(&["--out", s(&b), "embed", "--input", s(&a.join("lambda.bin")), "--dim", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["lambda.bin", "embedding.bin", "left.csv", "right.csv", "spectrum.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn one_cell_sweep_gives_one_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[evaluate]\nn_nodes = [30]\nn_bins = [4]\nn_layers = 2\nseeds = [3]\nmode = \"appendix-w\"\n",
    );
    let out = dir.path().join("o");
    let o = run(&["--config", s(&cfg), "--out", s(&out), "evaluate"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cells = fs::read_to_string(out.join("cells.csv")).unwrap();
    assert_eq!(cells.lines().count(), 2);
    assert!(cells.lines().nth(1).unwrap().starts_with("30,4,"));
}

#[test]
fn noiseless_clt_reports_degenerate_residuals() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[clt]\nn_nodes = 20\nn_bins = 4\nn_layers = 2\nseeds = [1]\nnoiseless = true\n",
    );
    let out = dir.path().join("o");
    let o = run(&["--config", s(&cfg), "--out", s(&out), "clt"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("degenerate"));
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("normality.json")).unwrap()).unwrap();
    assert_eq!(rep["pooled"]["degenerate"], serde_json::json!(true));
}

#[test]
fn single_cluster_cut_labels_everyone_alike() {
    let dir = TempDir::new().unwrap();
    let sim = dir.path().join("sim");
    assert_eq!(code(&run(&["--out", s(&sim), "simulate", "--nodes", "10", "--layers", "2"])), 0);
    let emb = dir.path().join("emb");
    let o = run(&["--out", s(&emb), "embed", "--input", s(&sim.join("events_seed0.csv")), "--bins", "6", "--dim", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cl = dir.path().join("cl");
    let o = run(&["--out", s(&cl), "cluster", "--embedding", s(&emb.join("embedding.bin")), "--k", "1", "--window", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let labels = fs::read_to_string(cl.join("labels.csv")).unwrap();
    let rows: Vec<&str> = labels.lines().skip(1).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.ends_with(",0")));
    let o = run(&["--out", s(&cl), "cluster", "--embedding", s(&emb.join("embedding.bin")), "--layer", "2"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}
