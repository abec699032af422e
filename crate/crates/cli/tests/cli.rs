use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn cnls(args: &[&str], cwd: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cnls"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn run_dirs(out: &Path, kind: &str) -> Vec<PathBuf> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with(&format!("{kind}-")))
        .collect();
    dirs.sort();
    dirs
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn sha256(bytes: &[u8]) -> String {
    cnls_cli::config::hex_digest(bytes)
}

#[test]
fn constants_reports_alpha_c() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, err) = cnls(&["constants", "--set", "c=0.5", "--set", "omega=0.3", "--out", "runs"], tmp.path());
    assert_eq!(code, 0, "{err}");
    let dir = &run_dirs(&tmp.path().join("runs"), "constants")[0];
    let report = json(&dir.join("constants.json"));
    let alpha = report["alpha_c"].as_f64().unwrap();
    assert!((alpha - 7.3691).abs() < 1e-3, "{alpha}");
    assert!(dir.join("profile_a.csv").exists());
}

#[test]
fn operators_pass_on_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, err) = cnls(&["operators", "--out", "runs"], tmp.path());
    assert_eq!(code, 0, "{err}");
    let dir = &run_dirs(&tmp.path().join("runs"), "operators")[0];
    assert_eq!(json(&dir.join("operators.json"))["pass"], Value::Bool(true));
}

#[test]
fn bad_config_lists_every_violation_with_lines() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.cfg"), "c = 0.5\nomega = 0.4\nprofile_n = 3\nspeed = 2\n").unwrap();
    let (code, _, err) = cnls(&["constants", "--config", "bad.cfg", "--out", "runs"], tmp.path());
    assert_eq!(code, 2);
    assert!(err.contains("line 3:"), "{err}");
    assert!(err.contains("line 4:"), "{err}");
    assert!(!tmp.path().join("runs").exists());

    // the coupling bound is a cross-key rule, reported once the keys parse
    fs::write(tmp.path().join("bound.cfg"), "c = 0.5\nomega = 0.4\n").unwrap();
    let (code, _, err) = cnls(&["constants", "--config", "bound.cfg"], tmp.path());
    assert_eq!(code, 2);
    assert!(err.contains("line 2:") && err.contains("0.375"), "{err}");
}

#[test]
fn reruns_are_byte_identical_and_share_a_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["reduce", "--set", "model=nonsym", "--set", "c=0.5", "--set", "alpha=7.369", "--out", "runs"];
    assert_eq!(cnls(&args, tmp.path()).0, 0);
    let dir = run_dirs(&tmp.path().join("runs"), "reduce").remove(0);
    let first = fs::read(dir.join("trajectory.csv")).unwrap();
    let manifest = fs::read(dir.join("manifest.json")).unwrap();
    assert_eq!(cnls(&args, tmp.path()).0, 0);
    assert_eq!(run_dirs(&tmp.path().join("runs"), "reduce").len(), 1);
    assert_eq!(fs::read(dir.join("trajectory.csv")).unwrap(), first);
    assert_eq!(fs::read(dir.join("manifest.json")).unwrap(), manifest);
}

#[test]
fn different_configs_get_different_directories() {
    let tmp = tempfile::tempdir().unwrap();
    for c in ["0.5", "0.6"] {
        let set = format!("c={c}");
        let args = ["reduce", "--set", "model=nonsym", "--set", &set, "--set", "alpha=7", "--out", "runs"];
        assert_eq!(cnls(&args, tmp.path()).0, 0);
    }
    assert_eq!(run_dirs(&tmp.path().join("runs"), "reduce").len(), 2);
}

#[test]
fn manifest_checksums_match_artifacts_and_record_sources() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.cfg"), "model = book\nc_gamma = 1\nc_sigma = 1\n").unwrap();
    let args = ["reduce", "--config", "run.cfg", "--set", "t_end=50", "--out", "runs"];
    assert_eq!(cnls(&args, tmp.path()).0, 0);
    let dir = run_dirs(&tmp.path().join("runs"), "reduce").remove(0);
    let manifest = json(&dir.join("manifest.json"));
    let artifacts = manifest["artifacts"].as_object().unwrap();
    assert!(artifacts.contains_key("trajectory.csv") && artifacts.contains_key("reduce.json"));
    for (name, digest) in artifacts {
        assert_eq!(sha256(&fs::read(dir.join(name)).unwrap()), digest.as_str().unwrap(), "{name}");
    }
    assert_eq!(manifest["overrides"][0], "t_end=50");
    assert_eq!(manifest["config"]["t_end"]["source"]["from"], "override");
    assert_eq!(manifest["config"]["c_gamma"]["source"]["line"], 2);
    assert_eq!(manifest["config"]["rel_dt"]["source"]["from"], "default");
    let hash = manifest["config_sha256"].as_str().unwrap();
    assert!(dir.file_name().unwrap().to_string_lossy().ends_with(&hash[..16]));
    let leftovers = fs::read_dir(&dir).unwrap().filter(|e| {
        e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".tmp")
    });
    assert_eq!(leftovers.count(), 0);
}

#[test]
fn fit_recovers_synthetic_coefficients() {
    let tmp = tempfile::tempdir().unwrap();
    let mut csv = String::from("t,y\n");
    for i in 0..120 {
        let t = 50.0 * 1.05f64.powi(i);
        csv.push_str(&format!("{t},{}\n", t.ln() + 0.5 * t.ln().ln() - 0.3));
    }
    fs::write(tmp.path().join("traj.csv"), csv).unwrap();
    let args = [
        "fit", "--set", "input=traj.csv", "--set", "model=loglog_fixed_slope", "--set", "slope=1",
        "--set", "loglog_min=0.25", "--set", "loglog_max=0.75", "--out", "runs",
    ];
    let (code, _, err) = cnls(&args, tmp.path());
    assert_eq!(code, 0, "{err}");
    let dir = run_dirs(&tmp.path().join("runs"), "fit").remove(0);
    let fit = json(&dir.join("fit.json"));
    assert!((fit["coefficients"]["r"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    assert!((fit["coefficients"]["q"].as_f64().unwrap() + 0.3).abs() < 1e-10);

    // the same data fails a window that excludes the log log range
    let args = [
        "fit", "--set", "input=traj.csv", "--set", "model=loglog_fixed_slope",
        "--set", "loglog_min=0.6", "--out", "runs",
    ];
    assert_eq!(cnls(&args, tmp.path()).0, 1);
}

#[test]
fn missing_input_is_an_input_error_with_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, err) = cnls(&["fit", "--set", "input=absent.csv", "--out", "runs"], tmp.path());
    assert_eq!(code, 2, "{err}");
    let dir = run_dirs(&tmp.path().join("runs"), "fit").remove(0);
    assert!(fs::read_to_string(dir.join("diagnostic.txt")).unwrap().contains("absent.csv"));
    assert_eq!(json(&dir.join("manifest.json"))["exit_code"], 2);
}

#[test]
fn short_regime_run_passes_and_writes_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "regime", "--set", "mode=nonsymmetric", "--set", "c=0.5", "--set", "omega=0.3",
        "--set", "grid_n=512", "--set", "dt=0.01", "--set", "t_end_factor=9",
        "--set", "sample_every=200", "--set", "snapshot_every=50", "--out", "runs",
    ];
    let (code, _, err) = cnls(&args, tmp.path());
    assert_eq!(code, 0, "{err}");
    let dir = run_dirs(&tmp.path().join("runs"), "regime").remove(0);
    assert!(dir.join("final.nls2").exists() && dir.join("snapshot_000000.nls2").exists());
    let (state, omega) = cnls::sim::read_snapshot(fs::File::open(dir.join("final.nls2")).unwrap()).unwrap();
    assert_eq!(omega, 0.3);
    assert_eq!(state.u.grid().len(), 512);
    assert_eq!(json(&dir.join("regime.json"))["report"]["pass"], Value::Bool(true));
}

#[test]
fn overlong_run_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "simulate", "--set", "mode=nonsymmetric", "--set", "c=0.5", "--set", "omega=0.3",
        "--set", "max_steps=10", "--out", "runs",
    ];
    let (code, _, err) = cnls(&args, tmp.path());
    assert_eq!(code, 2);
    assert!(err.contains("max_steps"), "{err}");
}
