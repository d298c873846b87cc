use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn umdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_umdp")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// The φ2 preset shrunk to a 20×20 grid, written into `dir`.
fn small_config(dir: &Path) -> PathBuf {
    let o = umdp(&["presets", "--show", "unicycle2d-phi2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut cfg: Value = serde_json::from_slice(&o.stdout).unwrap();
    cfg["partition"]["cells_per_dim"] = serde_json::json!([20, 20]);
    cfg["noise"]["n_samples"] = serde_json::json!(5000);
    cfg["simulation"]["cells"] = serde_json::json!(5);
    cfg["simulation"]["episodes"] = serde_json::json!(50);
    cfg["output"] = Value::String(dir.join("out").to_string_lossy().into_owned());
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn run(config: &Path, extra: &[&str]) -> (Output, Value) {
    let mut args = vec!["run", "--config", config.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = umdp(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = serde_json::from_slice(&o.stdout).unwrap();
    (o, summary)
}

#[test]
fn run_writes_summary_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (_, summary) = run(&cfg, &["--record", "1"]);
    let e_avg = summary["e_avg"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&e_avg));
    let out = dir.path().join("out");
    for f in ["abstraction.json", "synthesis.json", "strategy.json", "results.csv", "summary.json", "sweep.csv"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let results = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 20 * 20);
    assert_eq!(results.lines().next().unwrap(), "state_index,region_lower_0,region_lower_1,region_upper_0,region_upper_1,p_lower,p_upper,action");
    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().next().unwrap(), "cell_index,x_center_0,x_center_1,p_lower,empirical,ci_low,ci_high");
    assert_eq!(sweep.lines().count(), 1 + 5);
    assert!(out.join("trajectories").read_dir().unwrap().count() >= 5);
}

#[test]
fn stages_are_reused_when_inputs_match() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (_, first) = run(&cfg, &[]);
    let (o, again) = run(&cfg, &[]);
    let log = stderr(&o);
    assert!(log.contains("abstraction: cached") && log.contains("synthesis: cached"), "{log}");
    assert_eq!(first["e_avg"], again["e_avg"]);
    let (o, _) = run(&cfg, &["--tol", "1e-7"]);
    let log = stderr(&o);
    assert!(log.contains("abstraction: cached") && !log.contains("synthesis: cached"), "{log}");
    let (o, _) = run(&cfg, &["--fresh"]);
    assert!(!stderr(&o).contains("cached"));
}

#[test]
fn naive_intervals_give_a_wider_gap_than_full_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (_, full) = run(&cfg, &["--cells", "1"]);
    let (_, naive) = run(&cfg, &["--cells", "1", "--mode", "naive-imdp"]);
    assert!(naive["e_avg"].as_f64().unwrap() > full["e_avg"].as_f64().unwrap(), "{naive} vs {full}");
}

#[test]
fn missing_sample_file_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let missing = dir.path().join("nope.csv");
    let o = umdp(&["abstract", "--config", cfg.to_str().unwrap(), "--samples", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("parse error"), "{}", stderr(&o));
}

#[test]
fn config_and_numeric_failures_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let c = cfg.to_str().unwrap();
    assert_eq!(umdp(&["run", "--preset", "no-such-preset"]).status.code(), Some(2));
    assert_eq!(umdp(&["abstract", "--config", c, "--alpha", "0.0001"]).status.code(), Some(2));
    assert_eq!(umdp(&["synthesize", "--config", c, "--max-iters", "2"]).status.code(), Some(3));
    assert_eq!(umdp(&["run"]).status.code(), Some(2));
}

#[test]
fn presets_are_listed_and_round_trip() {
    let o = umdp(&["presets"]);
    let names = String::from_utf8(o.stdout).unwrap();
    assert!(names.lines().any(|l| l == "pendulum-phi1"));
    let dir = tempfile::tempdir().unwrap();
    for name in names.lines() {
        let shown = umdp(&["presets", "--show", name]);
        assert!(shown.status.success());
        let path = dir.path().join(format!("{name}.json"));
        std::fs::write(&path, &shown.stdout).unwrap();
        let parsed = umdp_core::config::RunConfig::load(&path).unwrap();
        assert_eq!(parsed.to_json().trim(), String::from_utf8_lossy(&shown.stdout).trim());
    }
}

#[test]
fn edited_sample_file_invalidates_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let samples = dir.path().join("w.csv");
    let write = |scale: f64| {
        let rows: Vec<String> = (0..6000).map(|k| format!("{}", scale * ((k * 37 % 101) as f64 - 50.0) / 500.0)).collect();
        std::fs::write(&samples, rows.join("\n")).unwrap();
    };
    let args = ["abstract", "--config", cfg.to_str().unwrap(), "--samples", samples.to_str().unwrap()];
    write(1.0);
    assert!(umdp(&args).status.success());
    assert!(stderr(&umdp(&args)).contains("abstraction: cached"));
    write(2.0);
    let o = umdp(&args);
    assert!(o.status.success());
    assert!(!stderr(&o).contains("cached"), "{}", stderr(&o));
}
