use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ferromf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ferromf"))
        .args(args)
        .env_remove("FERROMF_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// Data rows of a CSV artifact, header comments and column row removed.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let columns = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (columns, rows)
}

fn column(columns: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let k = columns.iter().position(|c| c == name).unwrap();
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn verify_bound_on_curie_weiss_reports_a_ratio_below_one() {
    let out = ferromf(&[
        "verify-bound",
        "--set",
        r#"model={"kind":"curie_weiss","n":16,"beta":0.8,"h":0.5}"#,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let result = &doc["result"];
    assert_eq!(result["method"], "enumeration");
    let ratio = result["ratio"].as_f64().unwrap();
    assert!(ratio > 0.0 && ratio <= 1.0, "{ratio}");
    assert_eq!(doc["meta"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["meta"]["config"]["model"]["n"], 16);
    assert_eq!(doc["meta"]["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn lee_yang_on_a_random_ferromagnet_exits_cleanly() {
    let out = ferromf(&[
        "lee-yang",
        "--seed",
        "10",
        "--set",
        r#"model={"kind":"random","n":10,"j_max":1.0,"h_min":0.0,"h_max":1.0}"#,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (columns, rows) = csv_rows(&stdout(&out));
    assert_eq!(columns, ["re", "im", "modulus"]);
    assert_eq!(rows.len(), 10);
    assert!(column(&columns, &rows, "modulus")
        .iter()
        .all(|r| (r - 1.0).abs() < 1e-8));
}

#[test]
fn field_sweep_gives_one_row_per_value_with_a_decreasing_bound() {
    let dir = tempfile::tempdir().unwrap();
    let gen = ferromf(&[
        "gen",
        "--seed",
        "2",
        "--set",
        r#"model={"kind":"random","n":9,"j_max":0.4,"h_min":0.1,"h_max":0.6}"#,
    ]);
    assert_eq!(gen.status.code(), Some(0), "{}", stderr(&gen));
    let system = write(dir.path(), "system.json", &stdout(&gen));
    let model = format!(
        r#"model={{"kind":"file","path":{}}}"#,
        serde_json::to_string(&system).unwrap()
    );
    let out = ferromf(&[
        "sweep",
        "--set",
        &model,
        "--set",
        "params.grid.h=[0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0]",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (columns, rows) = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 10);
    let rhs = column(&columns, &rows, "theorem_rhs");
    assert!(rhs.windows(2).all(|w| w[1] < w[0]), "{rhs:?}");
    let h = column(&columns, &rows, "h");
    assert_eq!(h[0], 0.1);
    assert_eq!(h[9], 1.0);
    for (r, b) in column(&columns, &rows, "residual").iter().zip(&rhs) {
        assert!(r <= b);
    }
}

#[test]
fn curie_weiss_size_sweep_keeps_n_times_residual_bounded() {
    let out = ferromf(&[
        "sweep",
        "--set",
        r#"model={"kind":"curie_weiss","n":8,"beta":0.8,"h":0.4}"#,
        "--set",
        "params.grid.n=[8,9,10,11,12,13,14,15,16,17,18,19,20]",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (columns, rows) = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 13);
    let scaled = column(&columns, &rows, "n_times_residual");
    let (lo, hi) = scaled
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi / lo < 1.5, "{scaled:?}");

    // the sector sum continues the column past the enumeration cap
    let big = ferromf(&[
        "sweep",
        "--set",
        r#"model={"kind":"curie_weiss","n":8,"beta":0.8,"h":0.4}"#,
        "--set",
        "params.grid.n=[20,2000,200000]",
    ]);
    assert_eq!(big.status.code(), Some(0), "{}", stderr(&big));
    let (columns, rows) = csv_rows(&stdout(&big));
    assert_eq!(rows[0][7], "enumeration");
    assert_eq!(rows[1][7], "sector_sum");
    let scaled = column(&columns, &rows, "n_times_residual");
    assert!(scaled.iter().all(|&x| x < 0.2 && x > 0.1), "{scaled:?}");
}

#[test]
fn empty_grid_is_rejected() {
    let out = ferromf(&[
        "sweep",
        "--set",
        r#"model={"kind":"curie_weiss","n":8,"beta":0.8,"h":0.4}"#,
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("grid"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn failing_points_become_error_rows() {
    let out = ferromf(&[
        "sweep",
        "--set",
        r#"model={"kind":"curie_weiss","n":8,"beta":0.8,"h":0.4}"#,
        "--set",
        "params.grid.beta=[0.5,-1.0,0.7]",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (columns, rows) = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 3);
    let error = columns.iter().position(|c| c == "error").unwrap();
    assert!(rows[0][error].is_empty() && rows[2][error].is_empty());
    assert!(!rows[1][error].is_empty());
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "sweep.json",
        r#"{
            "model": {"kind": "diluted", "n": 40, "beta": 0.9, "p": 0.3, "h": 0.5},
            "params": {"grid": {"h": [0.3, 0.6], "n": [10, 40]}, "sweeps": 300, "burn_in": 30},
            "seed": 17
        }"#,
    );
    let out = dir.path().join("out.csv");
    let out = out.to_str().unwrap();
    let mut runs = Vec::new();
    for threads in ["1", "3"] {
        let run = ferromf(&["sweep", "--config", &config, "--out", out, "--threads", threads]);
        assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
        runs.push(fs::read(out).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
    let text = String::from_utf8(runs[0].clone()).unwrap();
    assert!(text.starts_with(&format!("# ferromf {}\n", env!("CARGO_PKG_VERSION"))));
    assert!(text.contains("# seed 17\n"));
    assert!(text.contains("# config-sha256 "));
    // sampled points are reported with their standard errors
    let (columns, rows) = csv_rows(&text);
    let method = columns.iter().position(|c| c == "method").unwrap();
    assert_eq!(rows[2][method], "sampled");
    assert!(column(&columns, &rows[2..], "std_err")[0] > 0.0);
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "bad.json",
        "{\n  \"model\": {\"kind\": \"curie_weiss\", \"n\": 4, \"beta\": 0.5, \"h\": 0.1},\n  \"params\": {\"steps\": \"many\"}\n}\n",
    );
    let out = ferromf(&["lemma2", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("bad.json") && err.contains("line 3"), "{err}");
}

#[test]
fn flags_win_over_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "cfg.json",
        r#"{"model": {"kind": "curie_weiss", "n": 6, "beta": 0.5, "h": 0.3}, "seed": 1, "output": {"format": "csv"}}"#,
    );
    let out = ferromf(&[
        "verify-bound",
        "--config",
        &config,
        "--seed",
        "9",
        "--format",
        "json",
        "--set",
        "model.n=5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["meta"]["seed"], 9);
    assert_eq!(doc["result"]["sites"], 5);
}

#[test]
fn generated_documents_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kac.json");
    let out = ferromf(&[
        "gen",
        "--out",
        path.to_str().unwrap(),
        "--set",
        r#"model={"kind":"kac","dimension":1,"box_side":12,"lambda":0.3,"beta":0.8,"h":0.5,"kernel":{"kind":"uniform_ball"}}"#,
        "--set",
        "params.matrix=\"coo\"",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(&path).unwrap();
    let doc: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["j"]["format"], "coo");
    assert_eq!(doc["meta"]["task"], "gen");
    assert_eq!(doc["kac"]["center_site"], 6);
    let system = ferromf::io::system_from_json(&text).unwrap();
    assert_eq!(system.n(), 12);

    let csv = ferromf(&[
        "gen",
        "--format",
        "csv",
        "--set",
        r#"model={"kind":"rank_one","w":[0.1,0.2],"h":0.3}"#,
    ]);
    assert_eq!(csv.status.code(), Some(2));
}

#[test]
fn violations_exit_with_status_one() {
    // a tolerance no polynomial root finder can meet
    let out = ferromf(&[
        "lee-yang",
        "--set",
        r#"model={"kind":"curie_weiss","n":6,"beta":0.8,"h":0.2}"#,
        "--set",
        "params.tolerance=0.0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("violation"), "{}", stderr(&out));
}

#[test]
fn lemma_tasks_hold_on_a_small_system() {
    let model = r#"model={"kind":"random","n":6,"j_max":0.5,"h_min":0.2,"h_max":0.9,"seed":4}"#;
    for task in ["characteristic", "lemma1", "lemma2", "corederid"] {
        let out = ferromf(&[
            task,
            "--set",
            model,
            "--set",
            "params.steps=40",
            "--set",
            "params.site=2",
        ]);
        assert_eq!(out.status.code(), Some(0), "{task}: {}", stderr(&out));
    }
    let out = ferromf(&[
        "lemma1",
        "--format",
        "csv",
        "--set",
        model,
        "--set",
        "params.times=[0.5]",
    ]);
    let (columns, rows) = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[columns.len() - 1] == "true"));
}

#[test]
fn positive_state_needs_a_size_indexed_model() {
    let out = ferromf(&[
        "positive-state",
        "--set",
        r#"model={"kind":"rank_one","w":[0.1,0.2],"h":0.3}"#,
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = ferromf(&[
        "positive-state",
        "--format",
        "json",
        "--set",
        r#"model={"kind":"curie_weiss","n":2,"beta":1.5,"h":0.0}"#,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["result"]["bounded_away"], true);
}
