use std::path::{Path, PathBuf};
use std::process::Command;

use multiplex_core::harness::{ScenarioConfig, CSV_HEADER};
use multiplex_core::metrics::nmi;
use multiplex_core::Partition;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_multiplex"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn read_labels(path: &Path) -> Partition {
    let labels = std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.trim().parse().unwrap())
        .collect();
    Partition::from_labels(labels)
}

#[test]
fn generate_then_detect_recovers_communities() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["generate", "--scenario", "strong", "--n", "300", "--k", "3", "--layers", "5"])
        .args(["--avg-degree", "15", "--seed", "11", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let labels = dir.path().join("labels.txt");
    let status = bin()
        .arg("detect")
        .arg("--input")
        .arg(dir.path().join("graph.edges"))
        .args(["--method", "mean_adj", "--k", "3", "--seed", "1", "--out"])
        .arg(&labels)
        .status()
        .unwrap();
    assert!(status.success());
    let truth = read_labels(&dir.path().join("truth.txt"));
    let found = read_labels(&labels);
    let score = nmi(&truth, &found).unwrap();
    assert!(score > 0.9, "nmi {score}");
}

#[test]
fn shipped_configs_validate() {
    let mut count = 0;
    for sub in ["", "full"] {
        for entry in std::fs::read_dir(configs_dir().join(sub)).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "json") {
                ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
                count += 1;
            }
        }
    }
    assert_eq!(count, 14);
}

#[test]
fn simulate_hetero_config_writes_every_row() {
    let path = configs_dir().join("hetero.json");
    let cfg = ScenarioConfig::load(&path).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hetero.csv");
    let svg = dir.path().join("hetero.svg");
    let status = bin()
        .arg("simulate")
        .arg("--config")
        .arg(&path)
        .args(["--method", "mean_adj", "--threads", "1", "--out"])
        .arg(&out)
        .arg("--svg")
        .arg(&svg)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), cfg.reps * cfg.sweep.len());
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
}

#[test]
fn exit_codes() {
    assert_eq!(bin().arg("frobnicate").status().unwrap().code(), Some(2));
    assert_eq!(bin().status().unwrap().code(), Some(2));
    let missing = bin().args(["simulate", "--config", "/nonexistent/config.json"]).status().unwrap();
    assert_eq!(missing.code(), Some(1));
}

#[test]
fn verify_reports_json() {
    let out = bin()
        .args(["verify", "--p", "0.1", "--q", "0.05", "--layers", "4", "--k", "3", "--s", "40", "--reps", "5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let lambda = report["quantities"]["lambda_bar"].as_f64().unwrap();
    assert!((lambda - 40.0 * 0.05).abs() < 1e-8);
    assert_eq!(report["mean_deviation"]["norms"].as_array().unwrap().len(), 5);
}
