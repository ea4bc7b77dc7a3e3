use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn maxloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxloc"))
        .args(args)
        .env("MAXLOC_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn oracles_match_fixture() {
    let out = maxloc(&["oracles"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let emitted: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let fixture_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/oracles.json");
    let fixture = read_json(&fixture_path);
    assert_eq!(emitted, fixture);

    // spot checks against independent knowledge
    let zeros = fixture["j0_zeros"].as_array().unwrap();
    let known = [
        2.404825557695773,
        5.520078110286311,
        8.653727912911013,
        11.79153443901428,
        14.93091770848779,
    ];
    for (z, k) in zeros.iter().zip(known) {
        assert!((z.as_f64().unwrap() - k).abs() < 1e-10);
    }
    for row in fixture["disk_center_survival"].as_array().unwrap() {
        let t = row["t"].as_f64().unwrap();
        let s = row["survival"].as_f64().unwrap();
        let recomputed = maxloc::oracles::disk_center_survival(t).unwrap();
        assert!((s - recomputed).abs() < 1e-11);
        assert!(s > 0.0 && s < 1.0);
    }
}

#[test]
fn unknown_preset_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = maxloc(&["preset", "fig1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    for name in maxloc::PRESETS {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn preset_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let first = maxloc(&["preset", "square-sharpness", "--out", d]);
    assert!(first.status.success(), "{}", stdout(&first));
    let path = dir.path().join("square-sharpness/report.json");
    let bytes = fs::read(&path).unwrap();
    let second = maxloc(&["preset", "square-sharpness", "--out", d]);
    assert!(second.status.success());
    assert_eq!(bytes, fs::read(&path).unwrap());

    let report = read_json(&path);
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    assert!(report["module_versions"]["brownian_mc"].is_string());

    let summary = maxloc(&[
        "report",
        "--out",
        dir.path().join("square-sharpness").to_str().unwrap(),
    ]);
    assert!(summary.status.success());
    assert!(stdout(&summary).contains("PASS mode1"));
}

#[test]
fn corrupted_tolerance_flips_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let clean = maxloc(&["preset", "disk-baseline", "--n", "64", "--out", d]);
    assert_eq!(clean.status.code(), Some(0), "{}", stdout(&clean));

    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"curve": {"a0": 1}, "tolerances": {"lambda1_richardson": 1e-9}}"#,
    )
    .unwrap();
    let out = maxloc(&[
        "preset",
        "disk-baseline",
        "--n",
        "64",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        d,
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    assert!(stdout(&out).contains("FAIL lambda1_richardson"));
}

#[test]
fn malformed_config_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\"curve\": {\"a0\": 1},\n  \"dt\": 0.1}").unwrap();
    let out = maxloc(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("dt") && err.contains("line 2"), "{err}");

    fs::write(&cfg, r#"{"curve": {"a0": 0.1, "a": [0, 0.49]}}"#).unwrap();
    let out = maxloc(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("curve"));
}

#[test]
fn solve_writes_fields_with_one_row_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"curve": {"a0": 1, "a": [0, 0.3]}, "n": 64}"#).unwrap();
    let out_dir = dir.path().join("run");
    let out = maxloc(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = read_json(&out_dir.join("report.json"));
    let inside = report["result"]["grid"]["inside_nodes"].as_u64().unwrap() as usize;
    for name in ["eigenfield.csv", "torsion.csv"] {
        let text = fs::read_to_string(out_dir.join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y,value"));
        assert_eq!(lines.count(), inside);
    }
    assert_eq!(report["config"]["n"], 64);
    assert_eq!(report["config"]["mc"]["seed"], 42);
}

#[test]
fn mc_hit_against_obstacle_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("segment.csv");
    fs::write(&csv, "x,y\n1,0\n2,0\n").unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"curve": {{"a0": 1}}, "obstacle": {:?}, "mc": {{"n_paths": 2000, "t_final": 0.5}}}}"#,
            csv.to_str().unwrap()
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("mc");
    let out = maxloc(&[
        "mc-hit",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let mc = read_json(&out_dir.join("mc.json"));
    let p = mc["result"]["estimate"]["p_hat"].as_f64().unwrap();
    assert!(p > 0.0 && p < 0.5);
    assert!(mc["wall_seconds"].is_number());
    assert_eq!(mc["result"]["estimate"]["n_paths"], 2000);
}

#[test]
fn mc_hit_domain_with_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"curve": {"a0": 1}, "mc": {"n_paths": 500, "t_final": 0.1, "x0": {"x": 0, "y": 0}}}"#,
    )
    .unwrap();
    let run = |seed: &str, sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = maxloc(&[
            "mc-hit",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            seed,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        let mc = read_json(&out_dir.join("mc.json"));
        assert_eq!(
            mc["config"]["mc"]["seed"].as_u64().unwrap().to_string(),
            seed
        );
        mc["result"]["estimate"]["hits"].as_u64().unwrap()
    };
    assert_eq!(run("5", "a"), run("5", "b"));
}
