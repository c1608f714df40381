use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dxbounds"))
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn estimate_prints_table_and_seed() {
    let input = data("eua_sx.json");
    let o = run(&["estimate", "--input", input.to_str().unwrap(), "--assumption", "wa1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("seed: 20240601"));
    assert!(out.contains("beta preset: alpha/10"));
    assert!(out.contains("apparent         [0.846, 0.846]     [0.985, 0.985]"));
    assert!(out.contains("sharp            [0.762, 0.800]     [0.985, 1.000]"));
}

#[test]
fn estimate_writes_requested_formats() {
    let dir = tempfile::tempdir().unwrap();
    let input = data("eua_sx.json");
    let o = run(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--format",
        "json,csv",
    ]);
    assert!(o.status.success());
    assert!(dir.path().join("report.json").exists());
    assert!(dir.path().join("estimates.csv").exists());
    assert!(!dir.path().join("identified_set.svg").exists());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["provenance"]["seed"], 20240601);
}

#[test]
fn dump_moments_lists_all_components() {
    let input = data("eua_sx.json");
    let o = run(&["estimate", "--input", input.to_str().unwrap(), "--assumption", "wa1", "--dump-moments", "0.78,0.99"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("cell,j,value"));
    assert_eq!(out.lines().filter(|l| l.starts_with("11,")).count(), 8);
}

#[test]
fn infer_reports_confidence_set() {
    let input = data("eua_sx.json");
    let o = run(&[
        "infer",
        "--input",
        input.to_str().unwrap(),
        "--assumption",
        "wa1",
        "--theta-grid",
        "41",
        "--bootstrap",
        "100",
        "--seed",
        "7",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("seed: 7"));
    assert!(out.contains("quantile rule: higher"));
    assert!(out.contains("confidence set:"));
}

#[test]
fn sensitivity_lists_union_row() {
    let input = data("shah_sx.json");
    let o = run(&["sensitivity", "--input", input.to_str().unwrap(), "--assumption", "wa1", "--s1-range", "0.8,0.9"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let union = out.lines().find(|l| l.starts_with("union")).expect("union row");
    assert!(union.contains("[0.655, 0.744]"), "{union}");
}

#[test]
fn prevalence_and_predict_carry_disclaimer() {
    let input = data("eua_sx.json");
    let p = run(&["prevalence", "--input", input.to_str().unwrap(), "--assumption", "wa1", "--q", "0.1"]);
    assert!(p.status.success());
    assert!(stdout(&p).contains("transfer to another population"));
    let v = run(&["predict", "--input", input.to_str().unwrap(), "--pi-lo", "0.05", "--pi-hi", "0.2"]);
    assert!(v.status.success());
    assert!(stdout(&v).contains("positive predictive value"));
    assert!(stdout(&v).contains("transfer to another population"));
}

#[test]
fn simulate_coverage_prints_rows() {
    let input = data("eua_sx.json");
    let o = run(&[
        "simulate-coverage",
        "--input",
        input.to_str().unwrap(),
        "--assumption",
        "wa1",
        "--reps",
        "10",
        "--bootstrap",
        "50",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = stdout(&o).lines().filter(|l| l.starts_with('(')).count();
    assert_eq!(rows, 3);
}

#[test]
fn exit_codes() {
    let input = data("eua_sx.json");
    let refuted = run(&["estimate", "--input", input.to_str().unwrap(), "--s1", "0.3", "--s0", "0.5"]);
    assert_eq!(refuted.status.code(), Some(2));
    let missing = run(&["estimate", "--input", "/nonexistent/counts.json"]);
    assert_eq!(missing.status.code(), Some(3));
    let bad_flag = run(&["estimate", "--input", input.to_str().unwrap(), "--assumption", "sometimes"]);
    assert_eq!(bad_flag.status.code(), Some(3));
    let no_range = run(&["sensitivity", "--input", input.to_str().unwrap()]);
    assert_eq!(no_range.status.code(), Some(3));
    // P(t=1) = 0.226 is below 1 - s0 = 0.3.
    let data_refutes = run(&["estimate", "--input", input.to_str().unwrap(), "--s1", "0.95", "--s0", "0.7"]);
    assert_eq!(data_refutes.status.code(), Some(2));
}

#[test]
fn csv_input_matches_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("eua.csv");
    std::fs::write(&csv, "t,r,count\n1,1,99\n0,1,18\n1,0,5\n0,0,338\n").unwrap();
    let a = stdout(&run(&["estimate", "--input", csv.to_str().unwrap(), "--assumption", "wa1"]));
    let b = stdout(&run(&["estimate", "--input", data("eua_sx.json").to_str().unwrap(), "--assumption", "wa1"]));
    let table = |s: &str| s.lines().skip_while(|l| !l.starts_with("method")).collect::<Vec<_>>().join("\n");
    assert_eq!(table(&a), table(&b));
}
