use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn el_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_el-sim")).args(args).env_remove("EL_SIM_THREADS").output().expect("spawn el-sim")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SHORT: &str = r#"{
  "grid": { "n": 8 },
  "physics": {
    "k1": 1.0, "k2": 0.8, "k3": 1.2,
    "leslie": { "mu1": 1.0, "mu2": -0.2, "mu3": 0.7, "mu4": 1.0, "mu5": 0.8, "mu6": 0.45, "lambda": 0.5 },
    "delta": 0.1
  },
  "time": { "dt": 0.001, "t_end": T_END },
  "initial": { "kind": "random_smooth", "seed": 11 },
  "output": { "snapshot_cadence": 5 }
}"#;

fn write_config(dir: &Path, t_end: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, SHORT.replace("T_END", t_end)).unwrap();
    path
}

fn hashes(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "run_summary.json")
        .map(|p| {
            let digest = Sha256::digest(fs::read(&p).unwrap());
            (p.file_name().unwrap().to_string_lossy().into_owned(), digest.iter().map(|b| format!("{b:02x}")).collect::<String>())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn check_filter_runs_only_matching_checks() {
    let o = el_sim(&["check", "--filter", "gradient"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    for name in ["gradient_fs", "gradient_fh", "gradient_q"] {
        assert!(text.contains(name));
    }
    assert!(!text.contains("ellipticity"));
}

#[test]
fn injected_fault_names_the_failure() {
    let o = el_sim(&["check", "--filter", "lambda", "--inject-fault", "lambda-symmetry"]);
    assert!(!o.status.success());
    assert!(stdout(&o).contains("failed: lambda_symmetry"));
}

#[test]
fn unknown_filter_is_an_error() {
    let o = el_sim(&["check", "--filter", "no_such_check"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_length_run_writes_initial_state() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "0.0");
    let out = tmp.path().join("out");
    let o = el_sim(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("energy.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("t,kinetic,frank_k1"));
    for f in ["director_t000000.bin", "director_t000000.json", "velocity_t000000.bin", "run_summary.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let bin = fs::metadata(out.join("director_t000000.bin")).unwrap().len();
    assert_eq!(bin, 8 * 8 * 8 * 3 * 8);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "0.01");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = el_sim(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (ha, hb) = (hashes(&a), hashes(&b));
    assert_eq!(ha.len(), 1 + 2 * 2 * 3);
    assert_eq!(ha, hb);
}

#[test]
fn energy_column_does_not_increase() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "0.02");
    let out = tmp.path().join("out");
    assert!(el_sim(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.success());
    let csv = fs::read_to_string(out.join("energy.csv")).unwrap();
    let total: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(9).unwrap().parse().unwrap()).collect();
    assert_eq!(total.len(), 21);
    assert!(total.windows(2).all(|w| w[1] <= w[0] + 1e-8 * total[0]));
}

#[test]
fn config_errors_are_listed() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.json");
    let text = SHORT.replace("T_END", "0.0105").replace("\"delta\": 0.1", "\"delta\": -1.0").replace("\"mu4\": 1.0", "\"mu4\": -1.0");
    fs::write(&path, text).unwrap();
    let o = el_sim(&["run", "--config", path.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("invalid configuration"));
    assert!(err.lines().filter(|l| l.trim_start().starts_with("- ")).count() >= 3, "{err}");
}

#[test]
fn missing_config_fails_cleanly() {
    let o = el_sim(&["run", "--config", "/nonexistent/config.json"]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn sweep_writes_one_directory_per_delta() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "0.01");
    let root = tmp.path().join("sweep");
    let o = Command::new(env!("CARGO_BIN_EXE_el-sim"))
        .args(["sweep", "--config", cfg.to_str().unwrap(), "--deltas", "0.1,0.01", "--out", root.to_str().unwrap()])
        .env("EL_SIM_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(root.join("delta_00/energy.csv").exists());
    assert!(root.join("delta_01/energy.csv").exists());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(root.join("sweep_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["deltas"], serde_json::json!([0.1, 0.01]));
    assert_eq!(summary["members"].as_array().unwrap().len(), 2);
}

#[test]
fn sweep_rejects_nonpositive_delta() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "0.01");
    let o = el_sim(&["sweep", "--config", cfg.to_str().unwrap(), "--deltas", "0.1,-0.5", "--out", tmp.path().join("s").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("-0.5"));
}
