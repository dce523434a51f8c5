use std::fs;
use std::path::Path;
use std::process::Command;

use tvdopt::experiment::{builtin_scenario, ExperimentSpec, SweepRow};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tvdopt"))
}

fn short_case1(dir: &Path, t_end: f64) -> std::path::PathBuf {
    let mut spec = builtin_scenario("case1").unwrap();
    spec.sim.t_end = t_end;
    let path = dir.join("case1.toml");
    fs::write(&path, spec.to_toml().unwrap()).unwrap();
    path
}

fn read_rows(dir: &Path) -> Vec<SweepRow> {
    let mut r = csv::Reader::from_path(dir.join("sweep_summary.csv")).unwrap();
    r.deserialize().map(|row| row.unwrap()).collect()
}

#[test]
fn emit_spec_round_trips() {
    let out = bin().args(["builtin", "case2", "--emit-spec"]).output().unwrap();
    assert!(out.status.success());
    let spec = ExperimentSpec::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(spec, builtin_scenario("case2").unwrap());
}

#[test]
fn run_writes_outputs_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = short_case1(tmp.path(), 1.0);
    let out_dir = tmp.path().join("run");
    let out = bin().args(["run", spec.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--seed", "9"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["trajectory.csv", "reference.csv", "metrics.csv", "summary.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["seed"], 9);
    assert_eq!(summary["alpha"], 4.0);
    assert!(summary["alpha_bound"].as_f64().unwrap() > 0.0);
    let header = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert!(header.starts_with("t,x1_1,x1_2,"));
}

#[test]
fn malformed_spec_fails_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    fs::write(&path, "name = \"bad\"\nflow = \"consensus_zgs\"\nbogus = 1\n").unwrap();
    let out_dir = tmp.path().join("never");
    let out = bin().args(["run", path.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "spec");
    assert!(!out_dir.exists());
}

#[test]
fn disconnected_graph_has_its_own_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let mut spec = builtin_scenario("case2").unwrap();
    spec.network = Some(tvdopt::experiment::NetworkSpec::explicit(
        12,
        (1..12).filter(|&i| i != 6).map(|i| (i, i + 1, 1.0)).collect(),
    ));
    let path = tmp.path().join("split.toml");
    fs::write(&path, spec.to_toml().unwrap()).unwrap();
    let out = bin().args(["run", path.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn diverging_run_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let mut spec = builtin_scenario("smoke_centralized").unwrap();
    // curvature 1e-12 turns the tiny drift correction into a blow-up
    if let tvdopt::experiment::ProblemSpec::Quadratic { agents } = &mut spec.problem {
        agents[0].a = vec![1e-12, 1e-12];
    }
    spec.init = tvdopt::experiment::InitSpec::Zeros;
    spec.sim.t_end = 1.0;
    let path = tmp.path().join("div.toml");
    fs::write(&path, spec.to_toml().unwrap()).unwrap();
    let out = bin().args(["run", path.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_builtin_and_param_are_spec_errors() {
    assert_eq!(bin().args(["builtin", "case9"]).output().unwrap().status.code(), Some(2));
    let tmp = tempfile::tempdir().unwrap();
    let spec = short_case1(tmp.path(), 0.5);
    let out = bin().args(["sweep", spec.to_str().unwrap(), "--param", "beta", "--values", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn alpha_sweep_has_one_row_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = short_case1(tmp.path(), 1.0);
    let bound = 1.8431204196711444;
    let values = format!("{},{},{}", 0.5 * bound, 1.1 * bound, 2.0 * bound);
    let out_dir = tmp.path().join("sw");
    let out = bin()
        .args(["sweep", spec.to_str().unwrap(), "--param", "alpha", "--values", &values, "--out", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_rows(&out_dir);
    assert_eq!(rows.len(), 3);
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r.index, k);
        assert!(out_dir.join(format!("alpha_{k}/summary.json")).exists());
    }
}

#[test]
fn step_sweep_shrinks_chattering() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = short_case1(tmp.path(), 2.0);
    let out_dir = tmp.path().join("sw");
    let out = bin()
        .args(["sweep", spec.to_str().unwrap(), "--param", "h", "--values", "0.4e-3,0.2e-3,0.1e-3", "--out", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let chatter: Vec<f64> = read_rows(&out_dir).iter().map(|r| r.chattering.unwrap()).collect();
    assert!(chatter[0] > chatter[1] && chatter[1] > chatter[2], "{chatter:?}");
}

#[test]
fn link_noise_degrades_tracking() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = short_case1(tmp.path(), 2.0);
    let out_dir = tmp.path().join("sw");
    let out = bin()
        .args(["sweep", spec.to_str().unwrap(), "--param", "link_sigma", "--values", "0,1e-2", "--out", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ex: Vec<f64> = read_rows(&out_dir).iter().map(|r| r.final_e_x.unwrap()).collect();
    assert!(ex[1] > ex[0], "{ex:?}");
}
