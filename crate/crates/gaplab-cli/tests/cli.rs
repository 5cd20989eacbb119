//! CLI behavior: exit codes, diagnostics, artifact round-trip, raw paths.

use std::path::Path;
use std::process::Command;

fn gaplab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gaplab"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn interval_config(dir: &Path) -> String {
    format!(
        r#"
[domain]
kind = "interval"
length = 1.0

[grid]
n_1d = 1000

[sim]
dt = 1e-5
eta = 0.02
delta = 1e-3
horizon = 0.06
n_traj = 200
seed = 11
record_stride = 500

[verify]
pairs = 500
x0 = [0.25]
y0 = [-0.25]
gap_traj = 200

[output]
dir = "{}"
"#,
        dir.join("out").display()
    )
}

#[test]
fn malformed_config_exits_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[domain]
kind = "disk"
radius = 1.0

[grid]
h = -0.01
"#,
    );
    let out = gaplab()
        .arg("--config")
        .arg(&cfg)
        .arg("eigensolve")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("grid.h"), "diagnostic must name the field: {err}");
}

#[test]
fn missing_config_file_exits_2() {
    let out = gaplab()
        .arg("--config")
        .arg("/nonexistent/gaplab.toml")
        .arg("all")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_without_artifact_instructs_eigensolve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &interval_config(dir.path()));
    let out = gaplab()
        .arg("--config")
        .arg(&cfg)
        .arg("simulate")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("eigensolve"),
        "must point at the eigensolve step: {err}"
    );
}

#[test]
fn interval_gap_report_row_matches_the_analytic_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &interval_config(dir.path()));
    let out = gaplab()
        .arg("--config")
        .arg(&cfg)
        .arg("gap-report")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("spectral_gap_bound"), "{text}");
    assert!(text.contains("PASS"), "{text}");
    // lambda0 ~ 9.87, lambda1 ~ 39.48, gap ~ 29.61, bound 29.61
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out").join("report_gap-report.json")).unwrap(),
    )
    .unwrap();
    let gap_entry = report["reports"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["name"] == "spectral_gap_bound")
        .unwrap();
    let meta: std::collections::HashMap<String, String> = gap_entry["metadata"]
        .as_array()
        .unwrap()
        .iter()
        .map(|kv| {
            (
                kv[0].as_str().unwrap().to_string(),
                kv[1].as_str().unwrap().to_string(),
            )
        })
        .collect();
    let l0: f64 = meta["lambda0"].parse().unwrap();
    let l1: f64 = meta["lambda1"].parse().unwrap();
    assert!((l0 - 9.8696).abs() < 0.01, "lambda0 {l0}");
    assert!((l1 - 39.478).abs() < 0.05, "lambda1 {l1}");
}

#[test]
fn artifact_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), &interval_config(dir.path()));
    let ok = gaplab()
        .arg("--config")
        .arg(&cfg_path)
        .arg("eigensolve")
        .status()
        .unwrap();
    assert!(ok.success());

    let artifact = dir.path().join("out").join("ground_state.txt");
    let first = std::fs::read(&artifact).unwrap();

    // Round trip through the library loader and writer.
    let parsed = gaplab_cli::config::RunConfig::load(&cfg_path).unwrap();
    let fp = gaplab_cli::artifact::domain_fingerprint(&parsed);
    let loaded = gaplab_cli::artifact::load(&artifact, &fp).unwrap();
    let copy = dir.path().join("copy.txt");
    gaplab_cli::artifact::save(&copy, &loaded, &fp).unwrap();
    let second = std::fs::read(&copy).unwrap();
    assert_eq!(first, second, "artifact must round-trip byte-exactly");
}

#[test]
fn raw_paths_are_emitted_when_requested() {
    let dir = tempfile::tempdir().unwrap();
    let body = interval_config(dir.path()).replace(
        "dir = ",
        "formats = [\"table\", \"structured\", \"raw-paths\"]\ndir = ",
    );
    let cfg = write_config(dir.path(), &body);
    assert!(gaplab()
        .arg("--config")
        .arg(&cfg)
        .arg("eigensolve")
        .status()
        .unwrap()
        .success());
    let out = gaplab()
        .arg("--config")
        .arg(&cfg)
        .arg("simulate")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let paths = dir.path().join("out").join("paths_0000.tsv");
    let text = std::fs::read_to_string(&paths).unwrap();
    assert!(text.starts_with("# gaplab raw paths v1"));
    assert!(text.contains("# columns: time xi chord_F"));
    // Data rows parse as three floats.
    let row = text
        .lines()
        .find(|l| !l.starts_with('#'))
        .expect("at least one data row");
    let cols: Vec<f64> = row
        .split_whitespace()
        .map(|c| c.parse().unwrap())
        .collect();
    assert_eq!(cols.len(), 3);
}

#[test]
fn artifact_domain_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &interval_config(dir.path()));
    assert!(gaplab()
        .arg("--config")
        .arg(&cfg)
        .arg("eigensolve")
        .status()
        .unwrap()
        .success());
    // Same output dir, different domain.
    let other = interval_config(dir.path()).replace("length = 1.0", "length = 2.0");
    let cfg2 = write_config(dir.path(), &other);
    let out = gaplab()
        .arg("--config")
        .arg(&cfg2)
        .arg("simulate")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("re-run"), "{err}");
}

#[test]
fn threads_env_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &interval_config(dir.path()));
    let status = gaplab()
        .env(gaplab_cli::THREADS_ENV, "2")
        .arg("--config")
        .arg(&cfg)
        .arg("gap-report")
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
}
