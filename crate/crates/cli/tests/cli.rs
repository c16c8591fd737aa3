use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::io::Write;

use serde_json::Value;

fn hwq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hwq")).args(args).env_remove("HWQ_CORPUS").output().expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let out = hwq(&full);
    let code = out.status.code().expect("exit code");
    let text = String::from_utf8(out.stdout).expect("utf8");
    let value: Value = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    assert_schema(&value);
    (code, value)
}

fn assert_schema(v: &Value) {
    let top = v.as_object().expect("object");
    let mut keys: Vec<_> = top.keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["command", "items", "pass", "version"]);
    assert!(v["pass"].is_boolean() && v["version"].is_string() && v["command"].is_string());
    for item in v["items"].as_array().expect("items") {
        let obj = item.as_object().expect("item");
        for k in obj.keys() {
            assert!(
                ["name", "kind", "pass", "details", "numbers", "certificateDigest"].contains(&k.as_str()),
                "unexpected key {k}"
            );
        }
        assert!(item["name"].is_string() && item["kind"].is_string() && item["details"].is_string());
        assert!(item["pass"].is_boolean());
        if let Some(n) = item.get("numbers") {
            let chi = n["chi"].as_i64().unwrap();
            assert_eq!(chi, 2 - 2 * n["beta1"].as_i64().unwrap() + n["beta2"].as_i64().unwrap());
        }
        if let Some(d) = item.get("certificateDigest") {
            assert_eq!(d.as_str().unwrap().len(), 64);
        }
    }
}

fn items_of<'a>(v: &'a Value, kind: &str) -> Vec<&'a Value> {
    v["items"].as_array().unwrap().iter().filter(|i| i["kind"] == kind).collect()
}

fn corpus_file(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(format!("{name}.hw4"));
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn verify_default_passes() {
    let (code, v) = json(&["verify"]);
    assert_eq!(code, 0);
    assert_eq!(v["pass"], true);
    assert_eq!(items_of(&v, "script").len(), 12);
    assert_eq!(items_of(&v, "tuples").len(), 3);
    assert_eq!(items_of(&v, "closure").len(), 2);
    assert_eq!(items_of(&v, "witness").len(), 2);
    let m6 = v["items"].as_array().unwrap().iter().find(|i| i["name"] == "m06").unwrap();
    assert_eq!(m6["numbers"], serde_json::json!({"beta1": 6, "beta2": 16, "chi": 6}));
}

#[test]
fn verify_is_deterministic() {
    let a = hwq(&["verify", "--format", "json"]);
    let b = hwq(&["verify", "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_fact_limit_fails_distinctly() {
    let (code, v) = json(&["verify", "--max-facts", "10"]);
    assert_eq!(code, 1);
    let failed: Vec<_> = v["items"].as_array().unwrap().iter().filter(|i| i["pass"] == false).collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|i| i["details"].as_str().unwrap().contains("fact limit")));
}

#[test]
fn verify_missing_corpus_is_usage_error() {
    let out = hwq(&["verify", "--corpus", "/definitely/not/here"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not found"));
}

#[test]
fn verify_corpus_override_from_env() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m06.hw4"), corpus_file("m06")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hwq"))
        .args(["verify", "--format", "json"])
        .env("HWQ_CORPUS", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(items_of(&v, "script").len(), 1);

    std::fs::write(dir.path().join("bad.hw4"), corpus_file("m06").replace("beta2 = 16", "beta2 = 15")).unwrap();
    let (code, v) = json(&["verify", "--corpus", dir.path().to_str().unwrap()]);
    assert_eq!(code, 1);
    let bad = v["items"].as_array().unwrap().iter().find(|i| i["name"] == "bad").unwrap();
    assert_eq!(bad["pass"], false);
    assert!(bad["details"].as_str().unwrap().contains("got 16"));
}

#[test]
fn run_script_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m07.hw4");
    std::fs::write(&path, corpus_file("m07")).unwrap();
    let (code, v) = json(&["run", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let last = v["items"].as_array().unwrap().last().unwrap();
    assert_eq!(last["numbers"], serde_json::json!({"beta1": 7, "beta2": 22, "chi": 10}));

    std::fs::write(&path, "start T4\nsurgery q1\n").unwrap();
    let out = hwq(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let out = hwq(&["run", "/no/such/script.hw4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn prove_with_certificate_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let tuples = dir.path().join("t.txt");
    std::fs::write(&tuples, "# seed pair\n[x1, y1, x2 y2, x3 y3]\nx2, x1 y3, x3 y2, y4\n").unwrap();
    let cert = dir.path().join("out.cert");
    let (code, v) = json(&[
        "prove",
        "--free-product",
        "3,4",
        "--tuples",
        tuples.to_str().unwrap(),
        "--emit-cert",
        cert.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(v["items"][0]["details"].as_str().unwrap().contains("12 commutators"));
    let text = std::fs::read_to_string(&cert).unwrap();
    assert!(text.starts_with("certificate steps"));
    assert!(text.trim_end().ends_with("end"));

    std::fs::write(&tuples, "x1, y1, x2 y2, x3 y3\n").unwrap();
    let (code, v) = json(&["prove", "--free-product", "3,4", "--tuples", tuples.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(v["items"][0]["details"].as_str().unwrap().contains("not derived"));

    std::fs::write(&tuples, "x1, y1, x2 y2\n").unwrap();
    let out = hwq(&["prove", "--free-product", "3,4", "--tuples", tuples.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bounds_tables() {
    let (code, v) = json(&["bounds", "free", "--max", "12"]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = v["items"].as_array().unwrap().iter().map(|i| i["details"].as_str().unwrap()).collect();
    assert_eq!(rows.len(), 13);
    assert_eq!(rows[3], "3, 3, 1, 6, 2");
    assert_eq!(rows[5], "5, 10, 0, 14, 6");
    assert_eq!(rows[6], "6, 15, 1, 16, 6");

    let (code, v) = json(&["bounds", "abelian", "--torsion", "2,2,2,2", "--rank", "1"]);
    assert_eq!(code, 0);
    assert!(v["items"][0]["details"].as_str().unwrap().contains("exact 6"));
    let out = hwq(&["bounds", "abelian", "--torsion", "2,3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = hwq(&["bounds", "abelian", "--rank", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn closures() {
    let (code, v) = json(&["closure", "--set", "R", "--max", "6"]);
    assert_eq!(code, 0);
    assert_eq!(v["items"][0]["details"], "(3,4) (3,6) (4,3) (4,6) (5,6) (6,3) (6,4) (6,5) (6,6)");
    let (_, v) = json(&["closure", "--set", "S", "--max", "12"]);
    assert_eq!(v["items"][0]["details"], "0 1 2 4 6 7 8 9 10 11 12");
    assert_eq!(hwq(&["closure", "--set", "T", "--max", "5"]).status.code(), Some(2));
}

#[test]
fn snf_file_and_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.mat");
    std::fs::write(&path, "2 2\n2 4\n6 8\n").unwrap();
    let (code, v) = json(&["snf", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(v["items"][0]["details"].as_str().unwrap().contains("invariant factors [2, 4]"));

    let mut child = Command::new(env!("CARGO_BIN_EXE_hwq"))
        .args(["snf", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"1 3\n4 6 10\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("invariant factors [2]"));

    std::fs::write(&path, "2 2\n1 x\n").unwrap();
    assert_eq!(hwq(&["snf", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn search_commands() {
    assert_eq!(hwq(&["search", "--m", "3", "--n", "3"]).status.code(), Some(2));
    let (code, v) = json(&["search", "--m", "3", "--n", "4", "--seed", "7"]);
    assert_eq!(code, 0);
    assert!(v["items"][0]["certificateDigest"].is_string());
    let (code, _) = json(&["search", "--m", "3", "--n", "4", "--budget", "10"]);
    assert_eq!(code, 1);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(hwq(&[]).status.code(), Some(2));
    assert_eq!(hwq(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(hwq(&["verify", "--format", "yaml"]).status.code(), Some(2));
}
