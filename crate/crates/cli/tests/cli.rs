use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muhankel"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    run(dir, args).status.code().expect("exit code")
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn catalog_outputs_and_validation() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["catalog", "--group", "su2", "--cutoff", "6", "--out-dir", "su2"]);
    assert_eq!(json(d.join("su2/catalog.json"))["labels"].as_array().unwrap().len(), 5);

    ok(d, &["catalog", "--group", "torus:1", "--cutoff", "4", "--out-dir", "t", "--format", "csv"]);
    let csv = fs::read_to_string(d.join("t/catalog.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5);

    assert_eq!(code(d, &["catalog", "--group", "su2", "--cutoff", "-1", "--out-dir", "bad"]), 2);
    assert_eq!(code(d, &["catalog", "--cutoff", "-1"]), 2);
    assert_eq!(code(d, &["catalog", "--group", "so3", "--cutoff", "1"]), 2);
}

#[test]
fn manifest_lists_existing_outputs() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["random-symbol", "--group", "su2", "--cutoff", "2", "--seed", "4", "--out-dir", "s"]);
    ok(d, &["spectrum", "--symbol", "s/symbol.json", "--mu", "1", "--out-dir", "spec"]);
    let manifest = json(d.join("spec/manifest.json"));
    assert_eq!(manifest["command"], "spectrum");
    assert_eq!(manifest["inputs"][0], "s/symbol.json");
    for name in manifest["outputs"].as_array().unwrap() {
        let path = d.join("spec").join(name.as_str().unwrap());
        let text = fs::read_to_string(&path).unwrap();
        if path.extension().unwrap() == "json" {
            serde_json::from_str::<Value>(&text).unwrap();
        }
    }
    let spectrum = json(d.join("spec/spectrum.json"));
    let names: Vec<&str> = spectrum["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["carleson", "compactness", "norm-equivalence", "schur-bound"]);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let runs: Vec<TempDir> = (0..2).map(|_| TempDir::new().unwrap()).collect();
    for tmp in &runs {
        let d = tmp.path();
        ok(d, &["random-symbol", "--group", "su2", "--cutoff", "6", "--matching", "--density", "0.9", "--seed", "11", "--out-dir", "s"]);
        ok(d, &["stability", "--symbol", "s/symbol.json", "--trials", "4", "--seed", "11", "--out-dir", "st"]);
    }
    for rel in ["s/symbol.json", "s/manifest.json", "st/stability.csv", "st/stability.json", "st/manifest.json"] {
        let a = fs::read(runs[0].path().join(rel)).unwrap();
        let b = fs::read(runs[1].path().join(rel)).unwrap();
        assert_eq!(a, b, "{rel} differs between runs");
    }
}

#[test]
fn schatten_scan_verdicts() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    for (alpha, expected) in [("2", true), ("1", false), ("1.5", false)] {
        let out = format!("scan-{alpha}");
        ok(d, &["schatten-scan", "--p", "2", "--alpha", alpha, "--out-dir", &out]);
        let scan = json(d.join(&out).join("scan.json"));
        assert_eq!(scan["verdict"]["satisfied"], expected, "alpha {alpha}");
        let csv = fs::read_to_string(d.join(&out).join("partial_sums.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 4);
    }
    assert_eq!(code(d, &["schatten-scan", "--alpha", "1", "--series", "nope"]), 2);
    assert_eq!(code(d, &["schatten-scan", "--alpha", "1", "--group", "torus:1"]), 2);
}

#[test]
fn index_on_circle_and_nonsquare_symbols() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["fourier-symbol", "--coeffs=1:1", "--cutoff", "64", "--out-dir", "f"]);
    let stdout = ok(d, &["index", "--symbol", "f/symbol.json", "--out-dir", "i"]);
    assert!(stdout.contains("winding number 1"), "{stdout}");
    let report = json(d.join("i/index.json"));
    assert_eq!(report["circle"]["winding_number"], 1);
    assert_eq!(report["formula_index"], 0);

    // One 2x1 block: the formula does not apply but the numerical index does.
    let reference = r#"{"group":{"kind":"su2","half_integers":true},"cutoff":2.0}"#;
    let symbol = format!(
        r#"{{"domain":{reference},"codomain":{reference},"blocks":[{{"pi_index":[1],"rho_index":[0],"re":[[1.0],[2.0]],"im":[[0.0],[0.0]]}}]}}"#
    );
    fs::write(d.join("nonsquare.json"), symbol).unwrap();
    let stdout = ok(d, &["index", "--symbol", "nonsquare.json", "--out-dir", "n"]);
    assert!(stdout.contains("formula index inapplicable"), "{stdout}");
    assert!(stdout.contains("numerical index 0"), "{stdout}");

    // Too large to materialize as well: both paths fail.
    let reference = r#"{"group":{"kind":"su2","half_integers":true},"cutoff":2100.0}"#;
    let symbol = format!(
        r#"{{"domain":{reference},"codomain":{reference},"blocks":[{{"pi_index":[1],"rho_index":[0],"re":[[1.0],[2.0]],"im":[[0.0],[0.0]]}}]}}"#
    );
    fs::write(d.join("huge.json"), symbol).unwrap();
    assert_eq!(code(d, &["index", "--symbol", "huge.json", "--out-dir", "h"]), 4);
}

#[test]
fn positive_symbol_has_formula_index_zero() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["fourier-symbol", "--coeffs=0:2", "--cutoff", "0", "--out-dir", "f"]);
    ok(d, &["index", "--symbol", "f/symbol.json", "--out-dir", "i", "--format", "csv"]);
    assert_eq!(json(d.join("i/index.json"))["formula_index"], 0);
    assert!(d.join("i/contributing_pairs.csv").exists());
}

#[test]
fn round_trip_recovery_and_attribution_failure() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["random-symbol", "--group", "su2", "--cutoff", "6", "--matching", "--density", "0.9", "--seed", "3", "--out-dir", "s"]);
    ok(d, &["forward", "--symbol", "s/symbol.json", "--mu", "0.5", "--out-dir", "f"]);
    let stdout = ok(d, &["recover", "--data", "f/spectral_data.json", "--mu", "0.5", "--truth", "s/symbol.json", "--out-dir", "r"]);
    assert!(stdout.contains("max entry error"), "{stdout}");
    let err = json(d.join("r/recovery.json"))["max_entry_error"].as_f64().unwrap();
    assert!(err < 1e-9, "{err}");

    ok(d, &["random-symbol", "--group", "su2", "--cutoff", "2", "--density", "1", "--seed", "1", "--out-dir", "full"]);
    ok(d, &["forward", "--symbol", "full/symbol.json", "--out-dir", "ff"]);
    assert_eq!(code(d, &["recover", "--data", "ff/spectral_data.json", "--out-dir", "fr"]), 5);
    assert_eq!(code(d, &["recover", "--data", "f/spectral_data.json", "--alpha", "-1", "--out-dir", "x"]), 2);
    assert_eq!(code(d, &["recover", "--data", "missing.json", "--out-dir", "x"]), 2);
}

#[test]
fn stability_zero_delta_and_default_grid_slope() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["random-symbol", "--group", "su2", "--cutoff", "6", "--matching", "--density", "0.9", "--seed", "3", "--out-dir", "s"]);
    ok(d, &["stability", "--symbol", "s/symbol.json", "--delta-grid", "0", "--trials", "3", "--out-dir", "z"]);
    let zero = json(d.join("z/stability.json"));
    assert!(zero["rows"][0]["mean_error"].as_f64().unwrap() < 1e-9);

    ok(d, &["stability", "--symbol", "s/symbol.json", "--seed", "7", "--out-dir", "g"]);
    let slope = json(d.join("g/stability.json"))["slope"].as_f64().unwrap();
    assert!((0.8..=1.2).contains(&slope), "{slope}");
    let csv = fs::read_to_string(d.join("g/stability.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "delta,alpha,mean_error,std_error");
}

#[test]
fn dense_export_in_both_formats() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["random-symbol", "--group", "torus:1", "--cutoff", "4", "--seed", "2", "--out-dir", "s"]);
    ok(d, &["assemble", "--symbol", "s/symbol.json", "--out-dir", "a", "--format", "csv"]);
    let csv = fs::read_to_string(d.join("a/dense.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    ok(d, &["assemble", "--symbol", "s/symbol.json", "--out-dir", "b"]);
    assert_eq!(json(d.join("b/dense.json"))["re"].as_array().unwrap().len(), 5);
}
