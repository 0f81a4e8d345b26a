use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("randproj-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_doc(name: &str, doc: &Value) -> PathBuf {
    let path = scratch(name);
    std::fs::write(&path, serde_json::to_string_pretty(doc).unwrap()).unwrap();
    path
}

fn randproj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randproj")).args(args).output().expect("binary runs")
}

fn report(args: &[&str]) -> Value {
    let out = randproj(args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn path_str(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn shapley_reports_increment_averages() {
    let r = report(&["shapley", path_str(&fixture("overlapping_sets.json"))]);
    assert_eq!(r["increment_averages"], json!(["9/4", "5/4", "1/2", "0"]));
    assert_eq!(r["shapley"], json!(["5/6", "5/6", "3/2", "5/6"]));
    assert_eq!(r["union_cardinality_average"], json!("271/120"));
    assert_eq!(r["diagonal_integral"], json!("4"));
}

#[test]
fn singleton_family() {
    let doc = write_doc("singleton.json", &json!({"family": {"universe": ["a"], "sets": [["a"]]}}));
    let r = report(&["shapley", path_str(&doc)]);
    assert_eq!(r["shapley"], json!(["1"]));
    assert_eq!(r["increment_averages"], json!(["1"]));
}

#[test]
fn reports_round_trip_through_json() {
    for args in [
        vec!["shapley", "overlapping_sets.json"],
        vec!["resolution", "z3_projectors.json"],
        vec!["resolution", "z3_prebasis.json"],
    ] {
        let path = fixture(args[1]);
        let r = report(&[args[0], path_str(&path)]);
        let again: Value = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(r, again);
    }
}

#[test]
fn first_level_operator_is_exact() {
    let r = report(&["resolution", path_str(&fixture("z3_projectors.json"))]);
    assert_eq!(r["level_operators"][0][0][0], json!("7/24"));
    assert_eq!(r["kernel_mode"], json!("strict"));
    assert_eq!(r["moments"][1]["value"], json!("55/36"));
}

#[test]
fn orthonormal_basis_has_no_overlaps() {
    let doc = write_doc("orthonormal.json", &json!({"prebasis": {"vectors": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}}));
    let r = report(&["resolution", path_str(&doc)]);
    let norms = r["mobius_norm_by_size"].as_array().unwrap();
    assert!((norms[1].as_f64().unwrap() - 1.0).abs() < 1e-12);
    for v in &norms[2..] {
        assert!(v.as_f64().unwrap() < 1e-12, "{norms:?}");
    }
}

#[test]
fn bundled_fixtures_verify() {
    let out = randproj(&["verify", "--fixtures", path_str(&fixture(""))]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn corrupted_projector_fails_verification() {
    let text = std::fs::read_to_string(fixture("z3_projectors.json")).unwrap();
    let mut doc: Value = serde_json::from_str(&text).unwrap();
    doc["projectors"]["projectors"]["{1}"][0][0] = json!(0.501);
    let path = write_doc("corrupted.json", &doc);
    let out = randproj(&["verify", path_str(&path)]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn invalid_input_exits_with_one() {
    let empty = write_doc("empty.json", &json!({}));
    assert_eq!(randproj(&["shapley", path_str(&empty)]).status.code(), Some(1));
    assert_eq!(randproj(&["verify", path_str(&empty)]).status.code(), Some(1));
    assert_eq!(randproj(&["shapley", "/nonexistent/input.json"]).status.code(), Some(1));
    assert_eq!(randproj(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(randproj(&["--help"]).status.code(), Some(0));
}

#[test]
fn monte_carlo_is_deterministic() {
    let path = fixture("overlapping_sets.json");
    let args = ["montecarlo", path_str(&path), "--seed", "7", "--samples", "20000"];
    let a = randproj(&args);
    assert_eq!(a.stdout, randproj(&args).stdout);
    let r: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(r["seed"], json!(7));
    assert_eq!(r["algorithm"], json!("ChaCha8Rng, 16 streams"));
}

#[test]
fn certain_draws_have_zero_spread() {
    let doc = json!({
        "family": {"universe": ["a", "b"], "sets": [["a"], ["a", "b"]]},
        "probabilities": ["1", "1"]
    });
    let path = write_doc("certain.json", &doc);
    let r = report(&["montecarlo", path_str(&path), "--samples", "500"]);
    assert_eq!(r["within_band"], json!(true));
    for c in r["sets"]["comparisons"].as_array().unwrap() {
        assert_eq!(c["std_error"], json!(0.0), "{c}");
    }
}

#[test]
fn resolution_writes_csv_grids() {
    let out = scratch("grid.csv");
    let input = fixture("z3_projectors.json");
    report(&["resolution", path_str(&input), "--grid", "0,4,0.5,2,5", "--out", path_str(&out)]);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with('#') && lines[1].starts_with('#'));
    assert_eq!(lines[2], "x1,x2,re,im");
    assert_eq!(lines.len(), 3 + 25);
    let marginal = std::fs::read_to_string(scratch("grid.marginal.csv")).unwrap();
    assert!(marginal.lines().any(|l| l == "alpha,value"));
}

#[test]
fn strict_prebasis_rejects_degenerate_basis() {
    let path = fixture("z3_prebasis.json");
    let out = randproj(&["resolution", path_str(&path), "--strict-prebasis"]);
    assert_eq!(out.status.code(), Some(1));
    let relaxed = report(&["resolution", path_str(&path)]);
    assert_eq!(relaxed["kernel_mode"], json!("relaxed"));
    assert!(!relaxed["warnings"].as_array().unwrap().is_empty());
}
