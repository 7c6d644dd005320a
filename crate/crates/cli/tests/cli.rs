use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use ilw_core::ScatteringData;

fn ilw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ilw")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = vec!["--out", dir.to_str().unwrap()];
    all.extend_from_slice(args);
    ilw(&all)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("status JSON on stdout")
}

fn stderr_error(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("error line");
    serde_json::from_str(line).expect("error JSON on stderr")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_one_with_json() {
    for args in [
        vec!["frobnicate"],
        vec!["ensemble", "--eps", "0.1", "--N", "4"],
        vec!["ensemble", "--x-range", "3"],
        vec!["ensemble", "--precision-bits", "64"],
        vec!["mtp", "--nu", "0.25"],
        vec!["scattering", "--profile", "lorentzian"],
        vec!["simulate", "--x-range", "-2:6"],
    ] {
        let o = ilw(&args);
        assert_eq!(code(&o), 1, "{args:?}");
        let e = stderr_error(&o);
        assert_eq!(e["error"]["kind"], "usage", "{args:?}");
        assert_eq!(e["error"]["exit_code"], 1);
    }
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "N = 4\nbogus = 1\n").unwrap();
    let o = ilw(&["scattering", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr_error(&o)["error"]["message"].as_str().unwrap().contains("bogus"));
}

#[test]
fn numeric_failure_exits_two() {
    let dir = TempDir::new().unwrap();
    // past the catastrophe the Burgers state is multivalued
    let o = run_in(dir.path(), &["equilibrium", "--t", "1.0", "--grid", "32"]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr_error(&o)["error"]["kind"], "numeric");
}

#[test]
fn scattering_record_round_trips_through_its_header() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["scattering", "--N", "8", "--grid", "33"]);
    assert_eq!(code(&o), 0);
    let status = stdout_json(&o);
    let hash = status["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);

    let text = std::fs::read_to_string(dir.path().join("scattering_data.txt")).unwrap();
    assert!(text.starts_with("# tool: ilw "));
    assert!(text.contains(&format!("# config_hash: {hash}")));
    let data = ScatteringData::from_record(&text).unwrap();
    assert_eq!(data.n, 8);

    let table = std::fs::read_to_string(dir.path().join("weyl_density.csv")).unwrap();
    let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "kappa,re_zeta,rho_wyl,r_wyl");
    assert_eq!(rows.len(), 34);
    let json = read_json(&dir.path().join("scattering.json"));
    assert_eq!(json["metadata"]["config_hash"], hash.as_str());
    assert_eq!(json["kappas"].as_array().unwrap().len(), 8);
}

#[test]
fn outputs_are_deterministic_and_hash_tracks_config() {
    let run = |n: &str| {
        let dir = TempDir::new().unwrap();
        let o = run_in(dir.path(), &["ensemble", "--N", n, "--t", "0,0.2", "--grid", "101"]);
        assert_eq!(code(&o), 0);
        let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
        (
            stdout_json(&o)["config_hash"].as_str().unwrap().to_string(),
            read("ensemble_t0.0000.csv"),
            read("ensemble_t0.2000.csv"),
            read("ensemble.json"),
        )
    };
    let a = run("4");
    let b = run("4");
    assert_eq!(a, b);
    let c = run("5");
    assert_ne!(a.0, c.0);
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "command = \"scattering\"\nN = 4\ndelta = 1.0\ngrid = 9\n").unwrap();
    let out = dir.path().join("o");
    let o = ilw(&["scattering", "--config", cfg.to_str().unwrap(), "--N", "6", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let s = read_json(&out.join("scattering.json"));
    assert_eq!(s["N"], 6);
    assert_eq!(s["delta"], 1.0);

    let o = ilw(&["ensemble", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "config written for another command");
}

#[test]
fn simulate_reference_run_writes_four_snapshots() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["simulate"]);
    assert_eq!(code(&o), 0);
    for t in ["0.0000", "0.3000", "0.6500", "1.5000"] {
        let text = std::fs::read_to_string(dir.path().join(format!("snapshot_t{t}.csv"))).unwrap();
        let rows = text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, 2001, "t = {t}");
    }
    let s = read_json(&dir.path().join("simulate.json"));
    assert!(s["l2_drift"].as_f64().unwrap() <= 1e-6);
    assert!(s["mass_drift"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn equilibrium_reports_pass_at_reference_points() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["equilibrium", "--x", "0,2", "--t", "0", "--grid", "128"]);
    assert_eq!(code(&o), 0);
    let s = read_json(&dir.path().join("equilibrium.json"));
    assert_eq!(s["reports"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("density_x2.0000_t0.0000.csv").exists());
}

#[test]
fn mtp_error_decreases_along_the_sweep() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["mtp", "--grid", "11"]);
    assert_eq!(code(&o), 0);
    let s = read_json(&dir.path().join("mtp.json"));
    assert_eq!(s["decreasing_as_eps_shrinks"], true);
    for eps in ["0.1000", "0.0500", "0.0200"] {
        assert!(dir.path().join(format!("airy_eps{eps}.csv")).exists());
    }
    // a tolerance below the observed error turns into a verification failure
    let o = run_in(dir.path(), &["mtp", "--grid", "11", "--tolerance", "0.01"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn verify_subset_writes_reproducible_summary() {
    let run = || {
        let dir = TempDir::new().unwrap();
        let o = run_in(dir.path(), &["verify", "--criteria", "1,2,5"]);
        assert_eq!(code(&o), 0);
        let text = std::fs::read_to_string(dir.path().join("verify.json")).unwrap();
        let s: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(s["passed"], true);
        assert_eq!(s["criteria"].as_array().unwrap().len(), 3);
        text
    };
    assert_eq!(run(), run());
}

#[test]
fn compare_meets_the_bound_once_eps_is_small_enough() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["compare", "--N", "32", "--grid", "768"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let d = &read_json(&dir.path().join("compare.json"))["distances"][0];
    assert!(d["l2_sse_burgers"].as_f64().unwrap() <= 0.1);
    assert!(d["l2_sim_burgers"].as_f64().unwrap() <= 0.1);
}

#[test]
fn compare_at_eps_one_tenth_reports_the_known_gap() {
    // leading-order norming constants leave an O(ε) shift; at ε_N ≈ 0.1 the distance is ≈ 0.16
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["compare", "--grid", "512"]);
    assert_eq!(code(&o), 3);
    let s = read_json(&dir.path().join("compare.json"));
    let d = s["distances"][0]["l2_sse_burgers"].as_f64().unwrap();
    assert!(d > 0.1 && d < 0.2, "{d}");
    assert!(s["distances"][0]["l2_sim_burgers"].as_f64().unwrap() < 0.01);
}
