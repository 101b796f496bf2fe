use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn oscbump(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscbump")).args(args).output().unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios")
}

fn write_scenario(dir: &Path, v: &Value) -> PathBuf {
    let path = dir.join("s.json");
    std::fs::write(&path, serde_json::to_string(v).unwrap()).unwrap();
    path
}

fn small_scenario() -> Value {
    json!({
        "schema_version": 1,
        "name": "cli",
        "p": 2.0,
        "m": 1,
        "symbol": "sin(5)",
        "u": "poly(1,1)",
        "v": "constant(1)",
        "grid": { "domain": [0.0, 1.0], "depth": 7 },
        "sparse": [{ "kind": "stopping", "function": "power_weight(-0.5)", "ratio": 2.0 }],
        "seed": 1
    })
}

#[test]
fn suite_passes_and_is_reproducible() {
    let a = oscbump(&["suite", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = oscbump(&["suite", "--seed", "7"]);
    let (a, b) = (json_of(&a), json_of(&b));
    assert_eq!(a["all_hard_pass"], json!(true));
    assert_eq!(a["reports"].as_array().unwrap().len(), 7);
    assert_eq!(a["fingerprint"], b["fingerprint"]);
}

#[test]
fn run_writes_csv_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("checks.csv");
    let path = scenarios().join("constant_symbol.json");
    let r = oscbump(&["run", path.to_str().unwrap(), "--format", "csv", "--out", out.to_str().unwrap(), "--depth", "6"]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("scenario,check,status,key,value"));
    assert!(text.contains("constant-symbol,sparse_duality,pass"));
}

#[test]
fn failing_hard_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = small_scenario();
    v["tolerances"] = json!({ "sparse_duality": 1e-300 });
    let r = oscbump(&["run", write_scenario(dir.path(), &v).to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    let rep = json_of(&r);
    assert_eq!(rep["passed"], json!(false));
    let failed: Vec<&str> = rep["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["status"] == "fail")
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["sparse_duality"]);

    v["tolerances"] = json!({});
    let ok = oscbump(&["run", write_scenario(dir.path(), &v).to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn invalid_scenario_exits_two_with_all_problems() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = small_scenario();
    v["p"] = json!(1.0);
    v["grid"]["depth"] = json!(2);
    let r = oscbump(&["run", write_scenario(dir.path(), &v).to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("p must lie") && err.contains("depth"), "{err}");
}

#[test]
fn refinement_sweep_csv() {
    let path = scenarios().join("bloom_style.json");
    let r = oscbump(&["run", path.to_str().unwrap(), "--sweep", "6,7,8", "--format", "csv"]);
    assert_eq!(r.status.code(), Some(0));
    let text = String::from_utf8(r.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("depth,"));
}

#[test]
fn young_commands() {
    let r = oscbump(&["young", "check", "logbump(2,1)", "--p", "2"]);
    assert_eq!(r.status.code(), Some(0));
    let v = json_of(&r);
    assert_eq!(v["passed"], json!(true));
    assert_eq!(v["bp"]["verdict"], json!("diverges"));

    let r = oscbump(&["young", "inspect", "power(2)", "--points", "3", "--format", "csv"]);
    let text = String::from_utf8(r.stdout).unwrap();
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last.len(), 4);
    assert!((last[0] - 100.0).abs() < 1e-9 && (last[3] - 2500.0).abs() < 1e-6);

    let bad = oscbump(&["young", "check", "power(0.5)"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn hilbert_of_indicator_at_points() {
    let r = oscbump(&["op", "hilbert", "--f", "constant(1)", "--domain", "-1,1", "--depth", "12", "--at", "2,-3"]);
    assert_eq!(r.status.code(), Some(0));
    let v = json_of(&r);
    let vals: Vec<f64> = v["values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((vals[0] - 3f64.ln()).abs() < 1e-3);
    assert!((vals[1] + 2f64.ln()).abs() < 1e-3);
}

#[test]
fn sparse_build_verify_apply() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("fam.json");
    let fam_s = fam.to_str().unwrap();
    let r = oscbump(&["sparse", "build", "--f", "power_weight(-0.5)", "--ratio", "2", "--depth", "6", "--out", fam_s]);
    assert_eq!(r.status.code(), Some(0));
    let v = json_of(&oscbump(&["sparse", "verify", fam_s]));
    assert_eq!(v["sparse"], json!(true));
    assert!(v["cubes"].as_u64().unwrap() > 1);

    let r = oscbump(&["sparse", "apply", fam_s, "--b", "identity()", "--m", "1", "--f", "constant(1)", "--format", "csv"]);
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(String::from_utf8(r.stdout).unwrap().lines().count(), 65);

    let r = oscbump(&["sparse", "verify", "--cubes", "0:1;0:0.5;0:0.25", "--delta", "0.6", "--depth", "6"]);
    assert_eq!(r.status.code(), Some(1));
    assert_eq!(json_of(&r)["sparse"], json!(false));
}

#[test]
fn bump_commands() {
    let k = json_of(&oscbump(&["bump", "K", "--b", "identity()", "--m", "1", "--p", "2", "--depth", "8"]));
    let (kv, direct) = (k["bump"]["k"].as_f64().unwrap(), k["unbumped_direct"]["sum"].as_f64().unwrap());
    assert!((kv - direct).abs() <= 1e-8 * direct);

    let pre = json_of(&oscbump(&["bump", "preset", "cor1.6(1,0.5,2)", "--p", "2", "--depth", "6"]));
    assert!(!pre["warnings"].as_array().unwrap().is_empty());

    let ap = json_of(&oscbump(&["bump", "ap", "--w", "constant(3)", "--p", "2", "--depth", "6"]));
    assert!((ap["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let nec = oscbump(&["bump", "necessity", "--b", "identity()", "--m", "2", "--p", "2", "--depth", "6", "--format", "csv"]);
    let text = String::from_utf8(nec.stdout).unwrap();
    assert!(text.starts_with("key,value") && text.contains("first.value"));
}

#[test]
fn oscillation_and_orlicz_commands() {
    let bmo = json_of(&oscbump(&["osc", "bmo", "--b", "identity()", "--depth", "8"]));
    assert!((bmo["seminorm"].as_f64().unwrap() - 0.25).abs() < 1e-3);
    let root = oscbump(&["osc", "rootcheck", "--b", "root_log_symbol(2)", "--a", "2", "--depth", "10"]);
    assert_eq!(root.status.code(), Some(0));
    assert!(json_of(&root)["ratio"].as_f64().unwrap() <= 10.0);
    let avg = json_of(&oscbump(&["orlicz", "avg", "--gauge", "power(2)", "--f", "identity()", "--cube", "0,1"]));
    assert!((avg["value"].as_f64().unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-4);
}
