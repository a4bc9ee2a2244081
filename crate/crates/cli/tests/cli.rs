use std::path::Path;
use std::process::{Command, Output};

use gdms_cli::output::csv_body;

const TWO_SHIFT: &str = r#"{
  "system": { "kind": "similarity", "ratios": [0.5, 0.5] },
  "numerics": { "n": 6 },
  "pressure": { "t": [0.0], "beta_grid": { "from": 0.0, "to": 2.0, "count": 9 } }
}"#;

fn gdms(args: &[&str], config: &str, dir: &Path) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_gdms"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn pressure_run_writes_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = gdms(&["pressure", "--workers", "2", "--seed", "7"], TWO_SHIFT, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("out/pressure.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# tool=gdms version="));
    assert!(lines[0].ends_with("command=pressure"));
    assert_eq!(lines[1].len(), "# config_sha256=".len() + 64);
    assert_eq!(lines[2], "# seed=7 n=6 truncation=2 workers=2");
    assert_eq!(lines[3], "t,beta,lower,upper,n,N,tail_bound,exact");
    assert_eq!(lines.len(), 4 + 9);
    // beta = 0 counts words: log 2 exactly; beta = 1 is the zero.
    let first: Vec<&str> = lines[4].split(',').collect();
    assert!((first[2].parse::<f64>().unwrap() - 2f64.ln()).abs() < 1e-15);
    let mid: Vec<&str> = lines[8].split(',').collect();
    assert_eq!(mid[1].parse::<f64>().unwrap(), 1.0);
    assert!(mid[2].parse::<f64>().unwrap().abs() < 1e-15);
}

#[test]
fn negative_beta_is_a_config_error_naming_the_field() {
    let cfg = r#"{
      "system": { "kind": "similarity", "ratios": [0.5, 0.5] },
      "pressure": { "points": [ { "t": [0.0], "beta": 1.0 }, { "t": [0.0], "beta": -0.5 } ] }
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let o = gdms(&["pressure"], cfg, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("pressure.points[1].beta"), "{}", stderr(&o));
}

#[test]
fn malformed_and_unknown_fields_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = gdms(&["pressure"], "{ \"system\": ", dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = gdms(&["pressure"], r#"{ "system": { "kind": "similarity", "ratios": [0.5] }, "bogus": 1 }"#, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bogus"), "{}", stderr(&o));
    let o = gdms(&["spectrum"], TWO_SHIFT, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("spectrum"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gdms"))
        .args(["dimension", "--config"])
        .arg(dir.path().join("absent.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unreachable_tolerance_is_a_compute_error() {
    let cfg = r#"{
      "system": { "kind": "continued-fraction", "alphabet": 2 },
      "numerics": { "n": 3, "method": "word-sum", "tol": 1e-12 }
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let o = gdms(&["dimension"], cfg, dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("budget"), "{}", stderr(&o));
}

#[test]
fn bodies_identical_across_worker_counts() {
    let cfg = r#"{
      "system": { "kind": "continued-fraction", "alphabet": 5 },
      "potential": { "kind": "per-symbol", "values": [[1.0], [-1.0], [1.0], [-1.0], [1.0]] },
      "numerics": { "n": 5, "tol": 1e-4 },
      "spectrum": {
        "alpha": [[0.0], [0.3]],
        "surface": { "ranges": [ { "from": -1.0, "to": 1.0, "count": 5 } ] }
      }
    }"#;
    let mut bodies = Vec::new();
    for w in ["1", "3", "8"] {
        let dir = tempfile::tempdir().unwrap();
        let o = gdms(&["spectrum", "--workers", w], cfg, dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        let read = |f: &str| csv_body(&std::fs::read_to_string(dir.path().join("out").join(f)).unwrap());
        bodies.push((read("surface.csv"), read("spectrum.csv")));
    }
    assert!(bodies.windows(2).all(|b| b[0] == b[1]));
}

#[test]
fn counterexample_needs_no_system() {
    let dir = tempfile::tempdir().unwrap();
    let o = gdms(&["counterexample"], r#"{ "counterexample": { "m": 5.0, "n": [1e50, 1e60] } }"#, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/counterexample.json")).unwrap()).unwrap();
    assert_eq!(v["result"]["verdict"], "strict-gap");
    assert_eq!(v["metadata"]["command"], "counterexample");
}
