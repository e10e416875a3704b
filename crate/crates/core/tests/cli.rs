use std::path::Path;
use std::process::{Command, Output};

use crossdep::io::{read_panel, PanelFile};

fn crossdep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crossdep")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

fn simulate(dir: &Path, spec: &str, seed: u64, extra: &[&str]) -> String {
    let out = dir.join(format!("panel_{seed}.csv"));
    let path = out.to_str().unwrap().to_string();
    let mut args = vec!["simulate", "--spec", spec, "--seed"];
    let seed = seed.to_string();
    args.push(&seed);
    args.extend(["--out", &path]);
    args.extend(extra);
    let o = crossdep(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path
}

#[test]
fn estimate_near_truth_for_example_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate(dir.path(), "example1:0.8", 3, &[]);
    let json = dir.path().join("e.json");
    let o = crossdep(&["estimate", "--input", &path, "--tau", "1", "--json", json.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let alpha = value(&text, "alpha");
    assert!((alpha - 0.79).abs() < 0.05, "{alpha}");
    assert!(value(&text, "ci_lower") <= alpha && alpha <= value(&text, "ci_upper"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v["estimate"]["alpha"].as_f64().unwrap(), alpha);
    assert_eq!(v["estimate"]["method"], "joint");
}

#[test]
fn marginal_with_kappa() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate(dir.path(), "example1:0.8", 4, &["--n", "60", "--t", "80"]);
    let o = crossdep(&["estimate", "--input", &path, "--tau", "1", "--kappa", "9.4737"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("method marginal"));
}

#[test]
fn simulate_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "example3:0.5", 9, &["--n", "20", "--t", "30"]);
    let first = std::fs::read_to_string(&a).unwrap();
    simulate(dir.path(), "example3:0.5", 9, &["--n", "20", "--t", "30"]);
    assert_eq!(first, std::fs::read_to_string(&a).unwrap());
    let p = read_panel(&PanelFile::new(&a)).unwrap();
    assert_eq!((p.n(), p.t()), (20, 30));
    let b = simulate(dir.path(), "example3:0.5", 10, &["--n", "20", "--t", "30"]);
    assert_ne!(first, std::fs::read_to_string(b).unwrap());
}

#[test]
fn acf_lag_zero_is_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate(dir.path(), "example1:0.5", 1, &["--n", "10", "--t", "20"]);
    let o = crossdep(&["acf", "--input", &path, "--max-lag", "0"]);
    assert_eq!(stdout(&o), "0 1.0\n");
}

#[test]
fn acf_defactor_reports_both_series() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate(dir.path(), "example1:0.5", 1, &["--n", "10", "--t", "40"]);
    let o = crossdep(&["acf", "--input", &path, "--max-lag", "3", "--defactor"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# xbar\n0 1.0\n"));
    assert!(text.contains("# ubar"));
    let o = crossdep(&["acf", "--input", &path, "--max-lag", "39"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn select_tau_reports_choice() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate(dir.path(), "example1:0.8", 2, &["--n", "50", "--t", "60"]);
    let o = crossdep(&["select-tau", "--input", &path, "--taus", "1,2,3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let tau = value(&text, "tau_tilde") as usize;
    assert!((1..=3).contains(&tau));
    assert_eq!(text.lines().count(), 1 + 3 + 3);
}

#[test]
fn montecarlo_single_rep_matches_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate(dir.path(), "example1:0.8", 11, &["--n", "40", "--t", "50"]);
    let est = stdout(&crossdep(&["estimate", "--input", &path, "--tau", "1"]));
    let o = crossdep(&[
        "montecarlo",
        "--spec",
        "example1:0.8",
        "--n",
        "40",
        "--t",
        "50",
        "--reps",
        "1",
        "--seed",
        "11",
        "--taus",
        "1",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let table = stdout(&o);
    let row = table.lines().find(|l| l.contains(",alpha_tilde,")).unwrap();
    let cell = row.rsplit(',').next().unwrap();
    assert_eq!(cell, format!("{:.4}", value(&est, "alpha")));
}

#[test]
fn montecarlo_markdown_blocks() {
    let o = crossdep(&[
        "montecarlo",
        "--spec",
        "example1",
        "--alpha0",
        "0.8,0.5",
        "--n",
        "30",
        "--t",
        "40",
        "--reps",
        "4",
        "--taus",
        "0,1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.matches("| α₀=").count(), 2);
    assert!(text.contains("| α̂ |") && text.contains("90% CI Lower"));
}

#[test]
fn json_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let design = crossdep::dgp::DgpSpec::example1(25, 30, 0.5, 0);
    std::fs::write(&spec, serde_json::to_string(&design).unwrap()).unwrap();
    let out = dir.path().join("p.csv");
    let o = crossdep(&["simulate", "--spec", spec.to_str().unwrap(), "--seed", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_panel(&PanelFile::new(&out)).unwrap().n(), 25);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(crossdep(&["estimate", "--nope"]).status.code(), Some(2));
    assert_eq!(crossdep(&["estimate", "--input", "/no/such/file.csv"]).status.code(), Some(2));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1,2,3\n4,NA,6\n").unwrap();
    let o = crossdep(&["estimate", "--input", bad.to_str().unwrap(), "--tau", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 2"));

    // lag too large for the series
    let small = dir.path().join("small.csv");
    std::fs::write(&small, "1,2,3\n4,5,7\n").unwrap();
    assert_eq!(crossdep(&["estimate", "--input", small.to_str().unwrap(), "--tau", "5"]).status.code(), Some(2));

    // every partial mean is constant in time
    let flat = dir.path().join("flat.csv");
    std::fs::write(&flat, "1,1,1,1\n2,2,2,2\n3,3,3,3\n").unwrap();
    assert_eq!(crossdep(&["estimate", "--input", flat.to_str().unwrap(), "--tau", "1"]).status.code(), Some(3));

    // constant section cannot be standardized
    assert_eq!(
        crossdep(&["acf", "--input", flat.to_str().unwrap(), "--max-lag", "1", "--standardize"]).status.code(),
        Some(3)
    );
}

#[test]
fn columns_orientation_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("cols.csv");
    std::fs::write(&f, "a;b;c\n1;2;0\n3;1;1\n2;5;2\n4;3;1\n6;2;5\n").unwrap();
    let o = crossdep(&[
        "acf",
        "--input",
        f.to_str().unwrap(),
        "--columns",
        "--header",
        "--delimiter",
        ";",
        "--max-lag",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 2);
}
