use std::path::Path;
use std::process::{Command, Output};

fn pivot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pivot")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn frame(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const EIGHT: &str = "unit,pi\n1,0.2\n2,0.5\n3,0.3\n4,0.4\n5,0.9\n6,0.8\n7,0.5\n8,0.4\n";

#[test]
fn decompose_lists_the_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let f = frame(dir.path(), "eight.csv", EIGHT);
    let o = pivot(&["decompose", "--pi-file", &f]);
    assert!(o.status.success());
    let text = stdout(&o);
    for line in ["u_1   {1,2}", "u_5   {}", "u_7   {7,8}"] {
        assert!(text.contains(line), "{text}");
    }
}

#[test]
fn equal_probabilities_give_no_phantoms() {
    let dir = tempfile::tempdir().unwrap();
    let body: String = std::iter::once("unit,pi\n".to_string())
        .chain((1..=12).map(|k| format!("{k},{}\n", 1.0 / 3.0)))
        .collect();
    let f = frame(dir.path(), "flat.csv", &body);
    let o = pivot(&["decompose", "--pi-file", &f, "--format", "json"]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let strata = report["strata"].as_array().unwrap();
    assert_eq!(strata.len(), 4);
    assert!(strata.iter().all(|s| s.as_array().unwrap().len() == 3));
    assert!(report["crossings"].as_array().unwrap().iter().all(|c| c["phantom"] == true));
}

#[test]
fn fractional_totals_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let f = frame(dir.path(), "bad.csv", "unit,pi\n1,0.5\n2,0.6\n");
    let o = pivot(&["decompose", "--pi-file", &f]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not an integer"), "{:?}", o);
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let f = frame(dir.path(), "bad.csv", "unit,pi\n1,0.5\n2,x\n");
    let o = pivot(&["decompose", "--pi-file", &f]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn sampling_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let f = frame(dir.path(), "eight.csv", EIGHT);
    let args = ["sample", "--pi-file", &f, "--algorithm", "dss", "--replicates", "20", "--seed", "9"];
    let a = pivot(&args);
    let b = pivot(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 20);
    assert!(text.lines().all(|l| l.split(',').count() == 5));
}

#[test]
fn rho_is_checked() {
    let dir = tempfile::tempdir().unwrap();
    let f = frame(dir.path(), "eight.csv", EIGHT);
    let o = pivot(&["sample", "--pi-file", &f, "--algorithm", "cmc", "--rho", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    let o = pivot(&["sample", "--pi-file", &f, "--algorithm", "cmc"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn enumerate_writes_members_and_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let f = frame(dir.path(), "two.csv", "unit,pi\n1,0.4\n2,0.6\n");
    let o = pivot(&["enumerate", "--pi-file", &f]);
    assert!(o.status.success());
    let rows = pivot::format::parse_design_lines(&stdout(&o)).unwrap();
    assert_eq!(rows, vec![(vec!["1".to_string()], 0.4), (vec!["2".to_string()], 0.6)]);
}

#[test]
fn formula_and_enumerated_matrices_agree() {
    let dir = tempfile::tempdir().unwrap();
    let f = frame(dir.path(), "eight.csv", EIGHT);
    let parse = |o: Output| -> Vec<f64> {
        stdout(&o).lines().flat_map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect::<Vec<_>>()).collect()
    };
    let a = parse(pivot(&["pikl", "--pi-file", &f]));
    let b = parse(pivot(&["pikl", "--pi-file", &f, "--method", "enumeration"]));
    assert_eq!(a.len(), 64);
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
}

#[test]
fn metrics_report_design_effects() {
    let dir = tempfile::tempdir().unwrap();
    let body: String = std::iter::once("unit,pi,y\n".to_string())
        .chain(pivot::tables::Y3.iter().enumerate().map(|(k, y)| format!("{},{},{y}\n", k + 1, 1.0 / 3.0)))
        .collect();
    let f = frame(dir.path(), "y3.csv", &body);
    let o = pivot(&["metrics", "--pi-file", &f, "--rho", "0.5"]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert!(text.starts_with("metric,design,n,value\n"));
    let deff = |design: &str| -> f64 {
        let prefix = format!("deff:y,{design},4,");
        text.lines().find_map(|l| l.strip_prefix(&prefix)).unwrap().parse().unwrap()
    };
    assert!((deff("sys") - 5.44).abs() < 0.005);
    assert!((deff("ops") - 1.36).abs() < 0.005);
    assert!((deff("cmc0.5") - 2.81).abs() < 0.005);
    assert!((deff("srs") - 1.0).abs() < 1e-12);
}

#[test]
fn reproduce_prints_the_table() {
    let o = pivot(&["reproduce"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("OPS      0.35  1.10  1.10  0.17  0.95  1.36"), "{text}");
    assert!(text.contains("SYS      0.50  1.39  2.18  0.27  0.36  5.44"));
}

#[test]
fn fast_verification_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify.txt");
    let o = pivot(&["verify", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 9);
}
