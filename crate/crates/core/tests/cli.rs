use std::path::Path;
use std::process::{Command, Output};

fn corrgeo(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_corrgeo"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("CORRGEO_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const BELL: &str = r#"{"family":"bell_diagonal","params":[0.7,0.1,0.1,0.1]}"#;

#[test]
fn analyze_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bell.json", BELL);
    let out = corrgeo(&["analyze", &f], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let e = v["measures"]["E"]["value"].as_f64().unwrap();
    assert!((e - 0.118709100769).abs() < 1e-11);
    assert_eq!(v["ree"]["method"], "analytic-bell-diagonal");
    assert!(v["identity_residuals"]["rho"].as_f64().unwrap() <= 1e-7);
    assert_eq!(v["flags"]["subadditivity_violation"], false);
    assert!(v["witnesses"]["sigma"]["re"].is_array());
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "mid.json",
        r#"{"family":"mid_counterexample","params":[0.6,0.3,0.25,0.25,0.2]}"#,
    );
    let one = corrgeo(&["analyze", &f, "--seed", "3"], Some("1"));
    let four = corrgeo(&["analyze", &f, "--seed", "3"], Some("4"));
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn csv_and_table_formats() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bell.json", BELL);
    let out = corrgeo(&["analyze", &f, "--format", "csv", "--measures", "E,D"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let row = rdr.records().next().unwrap().unwrap();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    assert_eq!(&row[col("E")], "0.118709100769");
    assert_eq!(&row[col("Q")], "");

    let out = corrgeo(&["analyze", &f, "--format", "table"], None);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("subadditivity_gap"));
    assert!(text.contains("analytic-bell-diagonal"));
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"dims":[2],"matrix":{"re":[[0.5,0],[0,0.6]]}}"#);
    assert_eq!(corrgeo(&["analyze", &bad], None).status.code(), Some(2));
    let f = write(dir.path(), "bell.json", BELL);
    assert_eq!(corrgeo(&["analyze", &f, "--measures", "E,Z"], None).status.code(), Some(2));
    assert_eq!(corrgeo(&["analyze", "/nonexistent/state.json"], None).status.code(), Some(2));
    assert_eq!(corrgeo(&["analyze", &f, "--format", "xml"], None).status.code(), Some(2));
}

#[test]
fn werner_line_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "sweep.json",
        r#"{"family":"bell_diagonal","axes":[{"name":"l1","min":0.25,"max":1.0,"steps":7}],"measures":"E,T"}"#,
    );
    let out_path = dir.path().join("out.csv");
    let out = corrgeo(&["sweep", &spec, "--out", out_path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(&out_path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[0], "point");
    assert_eq!(&headers[1], "l1");
    let e_col = headers.iter().position(|h| h == "E").unwrap();
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 7);
    for row in &rows {
        let l1: f64 = row[1].parse().unwrap();
        let e: f64 = row[e_col].parse().unwrap();
        let expected = if l1 <= 0.5 { 0.0 } else { 1.0 - corrgeo::linalg::binary_entropy(l1) };
        assert!((e - expected).abs() < 1e-11, "l1 = {l1}: E = {e}");
    }
}

#[test]
fn single_point_sweep_matches_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "sweep.json",
        r#"{"family":"mid_counterexample","axes":[{"name":"q","min":0.6,"max":0.6,"steps":1}],
            "fixed":{"p00":0.3,"p01":0.25,"p10":0.25,"p11":0.2},"seed":4}"#,
    );
    let state = write(
        dir.path(),
        "state.json",
        r#"{"family":"mid_counterexample","params":[0.6,0.3,0.25,0.25,0.2]}"#,
    );
    let out_path = dir.path().join("out.csv");
    assert_eq!(
        corrgeo(&["sweep", &spec, "--out", out_path.to_str().unwrap()], None).status.code(),
        Some(0)
    );
    let swept = std::fs::read_to_string(&out_path).unwrap();
    let analyzed = corrgeo(&["analyze", &state, "--format", "csv", "--seed", "4"], None);
    let analyzed = String::from_utf8(analyzed.stdout).unwrap();
    let sweep_row: Vec<&str> = swept.lines().nth(1).unwrap().split(',').collect();
    let analyze_row: Vec<&str> = analyzed.lines().nth(1).unwrap().split(',').collect();
    // point index and five family parameters precede the shared columns
    assert_eq!(&sweep_row[6..], &analyze_row[..]);
}

#[test]
fn bad_sweep_spec_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "sweep.json", r#"{"family":"ghz","axes":[]}"#);
    let out_path = dir.path().join("out.csv");
    let out = corrgeo(&["sweep", &spec, "--out", out_path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_path.exists());
}
