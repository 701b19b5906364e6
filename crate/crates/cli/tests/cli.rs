use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nerve-einstein"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn cfg(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

#[test]
fn report_su3_t2() {
    let r = json(&run(&["report", &cfg("su3_t2.json")]));
    assert_eq!(r["verdict"], "EXISTS_BY_TOPOLOGY");
    assert_eq!(r["complex"]["certificate"]["status"], "nonContractible");
    assert_eq!(r["complex"]["certificate"]["degree"], 0);
    assert_eq!(r["einstein"]["solutions"].as_array().unwrap().len(), 4);
    assert_eq!(r["space"]["ell"], 3);
    assert_eq!(r["provenance"]["seed"], 0);
}

#[test]
fn report_aloff_wallach_adjoins_torus() {
    let r = json(&run(&["report", &cfg("su3_circle_11.json")]));
    assert_eq!(r["lattice"]["torusAdjoined"], 1);
    assert_eq!(r["lattice"]["nodes"].as_array().unwrap().len(), 3);
    assert_eq!(r["complex"]["certificate"]["status"], "nonContractible");
    assert_eq!(r["verdict"], "EXISTS_BY_TOPOLOGY");
    let sols = r["einstein"]["solutions"].as_array().unwrap();
    assert!(!sols.is_empty());
    assert!(sols.iter().all(|s| s["residual"].as_f64().unwrap() < 1e-9));
}

#[test]
fn numerical_verdict_on_contractible_space() {
    let r = json(&run(&["report", &cfg("sp3_u1sp2.json")]));
    assert_eq!(r["complex"]["certificate"]["status"], "contractible");
    assert_eq!(r["verdict"], "EXISTS_NUMERICALLY");
}

#[test]
fn malformed_config_exits_2_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"family\": \"su\", \"n\": ").unwrap();
    let out = dir.path().join("report.json");
    let o = run(&["report", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    let missing = run(&["describe", dir.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn unsupported_space_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    std::fs::write(&p, r#"{"family": "so", "n": 2, "subgroup": {"kind": "trivial"}}"#).unwrap();
    let o = run(&["describe", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}

#[test]
fn resource_cap_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    std::fs::write(&p, r#"{"family": "su", "n": 4, "subgroup": {"kind": "maximalTorus"}, "caps": {"maxSummands": 4}}"#).unwrap();
    assert_eq!(run(&["lattice", p.to_str().unwrap()]).status.code(), Some(4));
    std::fs::write(&p, r#"{"family": "su", "n": 4, "subgroup": {"kind": "maximalTorus"}, "caps": {"maxFaces": 5}}"#).unwrap();
    assert_eq!(run(&["homology", p.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let c = cfg("su3_t2.json");
    assert!(run(&["report", &c, "--seed", "5", "--out", a.to_str().unwrap()]).status.success());
    let o = bin().args(["report", &c, "--seed", "5", "--out", b.to_str().unwrap()]).env("NERVE_EINSTEIN_THREADS", "1").output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("verdict    EXISTS_BY_TOPOLOGY"));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let r: Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(r["provenance"]["seed"], 5);
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let o = bin().args(["einstein", &cfg("su3_t2.json")]).env("NERVE_EINSTEIN_THREADS", "many").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn curve_emits_csv() {
    let o = run(&["curve", &cfg("su3_t2.json"), "--t-max", "2", "--steps", "8"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,sc,r_1,r_2,r_3"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 9);
    assert_eq!(rows[0][1], 30.0);
    assert_eq!(rows[8][0], 2.0);
}

#[test]
fn describe_and_text_format() {
    let o = run(&["describe", &cfg("su3xsu3_t4.json"), "--format", "text"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("space      (SU(3)xSU(3))/T^4"));
    let l = json(&run(&["lattice", &cfg("su3xsu3_t4.json")]));
    assert_eq!(l["lattice"]["nodes"].as_array().unwrap().len(), 23);
}
