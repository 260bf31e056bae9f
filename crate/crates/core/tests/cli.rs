use std::path::Path;
use std::process::{Command, Output};

use ctxnet::ingest::CSV_HEADER;

fn ctxnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctxnet")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn synth(dir: &Path, name: &str, days: &str, seed: &str) -> String {
    let path = dir.join(name);
    let out = ctxnet(&["synth", "--days", days, "--seed", seed, "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    path.to_str().unwrap().to_owned()
}

#[test]
fn analyze_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path(), "p01.csv", "240", "2");
    let out = dir.path().join("run");
    let res = ctxnet(&[
        "analyze",
        &input,
        "--context",
        "locations",
        "--subset",
        "positive",
        "--permutations",
        "200",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    for f in ["run.json", "baseline.json", "histogram.csv", "table.txt", "manifest.json"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let table = String::from_utf8(res.stdout).unwrap();
    assert!(table.contains("Locations"), "{table}");
}

#[test]
fn validate_reports_eligibility() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path(), "p.csv", "300", "1");
    let res = ctxnet(&["validate", &input, "--json"]);
    assert_eq!(code(&res), 0);
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["participant_id"], "p");
}

#[test]
fn out_of_range_score_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let mut row = vec!["2024-01-01".to_string(), "7".into()];
    row.extend(std::iter::repeat_n("1".to_string(), 9));
    row.extend(std::iter::repeat_n("0".to_string(), 6));
    std::fs::write(&path, format!("{}\n{}\n", CSV_HEADER.join(","), row.join(","))).unwrap();
    let res = ctxnet(&[
        "analyze",
        path.to_str().unwrap(),
        "--context",
        "locations",
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("ema_calm"), "{}", stderr(&res));
}

#[test]
fn small_pool_exits_with_insufficient_data() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path(), "short.csv", "40", "1");
    let res = ctxnet(&["analyze", &input, "--context", "locations", "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&res), 3, "{}", stderr(&res));
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("o");
    let o = o.to_str().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(code(&ctxnet(&["cohort", empty.to_str().unwrap(), "--context", "locations", "--out", o])), 2);
    assert_eq!(code(&ctxnet(&["analyze", "/no/such.csv", "--context", "locations", "--out", o])), 2);
    let input = synth(dir.path(), "p.csv", "90", "1");
    assert_eq!(code(&ctxnet(&["analyze", &input, "--context", "baseline", "--out", o])), 2);
    assert_eq!(code(&ctxnet(&["analyze", &input, "--context", "steps", "--out", o])), 2);
}

#[test]
fn export_network_and_print_config() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path(), "p.csv", "120", "4");
    let res = ctxnet(&["export-network", &input, "--context", "locations", "--category", "isolation"]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    assert!(String::from_utf8(res.stdout).unwrap().starts_with("graph"));

    let res = ctxnet(&["synth", "--preset", "null", "--print-config"]);
    let cfg = ctxnet::SynthConfig::from_toml_str(&String::from_utf8(res.stdout).unwrap()).unwrap();
    assert_eq!(cfg, ctxnet::SynthConfig::null(300, 0));
}
