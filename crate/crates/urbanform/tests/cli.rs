//! The command line end to end: generated inputs, stage artifacts, exit
//! codes, reruns and resumability.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use urbanform::config::PipelineConfig;

fn urbanform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_urbanform")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = urbanform(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn generate(kind: &str, dir: &Path, extra: &[&str]) -> String {
    let mut args = vec!["generate", "--kind", kind, "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    ok(&args);
    dir.join("config.toml").to_str().unwrap().to_string()
}

/// Every artifact except the echoed config, which names its directory.
fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "resolved_config.toml")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn toy_scene_runs_with_one_type() {
    let dir = tempfile::tempdir().unwrap();
    let config = generate("toy", dir.path(), &[]);
    ok(&["pipeline", "--config", &config]);
    let out = dir.path().join("out");

    let cells = json(&out.join("cells.geojson"));
    assert_eq!(cells["features"].as_array().unwrap().len(), 2);
    let header = fs::read_to_string(out.join("context.csv")).unwrap();
    let columns = header.lines().next().unwrap().split(',').count();
    assert_eq!(columns, 1 + 88, "id plus 22 characters x 4 statistics");

    let model = json(&out.join("model.json"));
    assert_eq!(model["k"], 1);
    assert_eq!(model["selection"], "forced");
    let taxonomy = json(&out.join("taxonomy.json"));
    assert!(taxonomy["skipped"].as_str().unwrap().contains("2"), "{taxonomy}");
    for name in ["cells_labeled.geojson", "labels.csv", "bic.csv", "resolved_config.toml", "primary.csv"] {
        assert!(out.join(name).exists(), "{name}");
    }
}

#[test]
fn reruns_and_stagewise_runs_match() {
    let dir = tempfile::tempdir().unwrap();
    let config = generate("random", dir.path(), &["--n", "400", "--seed", "9"]);
    ok(&["pipeline", "--config", &config]);
    let first = artifacts(&dir.path().join("out"));
    for name in
        ["labels.csv", "bic.csv", "model.json", "taxonomy.json", "taxonomy.nwk", "context.csv", "cells_labeled.geojson"]
    {
        assert!(first.contains_key(name), "{name}");
    }

    ok(&["pipeline", "--config", &config, "--threads", "3"]);
    assert!(first == artifacts(&dir.path().join("out")), "rerun changed an artifact");

    // Same inputs, stage by stage, into a second directory.
    let mut staged = PipelineConfig::load(Path::new(&config)).unwrap();
    staged.output.directory = dir.path().join("staged");
    let staged_config = dir.path().join("staged.toml");
    fs::write(&staged_config, staged.to_toml()).unwrap();
    let staged_config = staged_config.to_str().unwrap();
    for stage in ["tessellate", "graph", "characters", "context", "cluster", "taxonomy"] {
        ok(&[stage, "--config", staged_config]);
    }
    let stagewise = artifacts(&dir.path().join("staged"));
    assert_eq!(first.keys().collect::<Vec<_>>(), stagewise.keys().collect::<Vec<_>>());
    for (name, bytes) in &first {
        assert!(bytes == &stagewise[name], "{name} differs between pipeline and stage-wise runs");
    }

    // A forced component count replaces the elbow.
    ok(&["cluster", "--config", &config, "--k", "3"]);
    let model = json(&dir.path().join("out").join("model.json"));
    assert_eq!(model["k"], 3);
    assert_eq!(model["selection"], "forced");
}

#[test]
fn missing_upstream_artifact_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let config = generate("toy", dir.path(), &[]);
    let out = urbanform(&["cluster", "--config", &config]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("`context` stage"), "{stderr}");
    // Log lines are JSON objects.
    for line in stderr.lines() {
        let v: serde_json::Value = serde_json::from_str(line).expect("JSON log line");
        assert!(v["level"].is_string() && v["message"].is_string());
    }
}

#[test]
fn invalid_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[context]\norder = \"three\"\n").unwrap();
    let out = urbanform(&["tessellate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(&path, "[clustering]\nk_min = 4\nk_max = 2\n").unwrap();
    let out = urbanform(&["pipeline", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unreadable_buildings_are_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("buildings.geojson"), "{\"type\": \"FeatureCollection\", \"features\": [").unwrap();
    fs::write(dir.path().join("config.toml"), "").unwrap();
    let out = urbanform(&["tessellate", "--config", dir.path().join("config.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bundled_toy_fixture_runs() {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("toy");
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(&fixture).unwrap() {
        let path = entry.unwrap().path();
        if path.is_file() {
            fs::copy(&path, dir.path().join(path.file_name().unwrap())).unwrap();
        }
    }
    ok(&["pipeline", "--config", dir.path().join("config.toml").to_str().unwrap()]);
    assert!(dir.path().join("out").join("cells_labeled.geojson").exists());
}
