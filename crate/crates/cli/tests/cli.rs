//! End-to-end runs of the `wavelab` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn wavelab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavelab")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write_config(dir: &Path, name: &str, doc: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(doc).unwrap()).unwrap();
    path
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn pair_analysis() -> Value {
    serde_json::json!({
        "name": "pair",
        "command": "analyze",
        "seed": 7,
        "parameters": { "kappa": 1.4, "families": [["gamma+", "gamma-"]] }
    })
}

fn constant_simulation() -> Value {
    serde_json::json!({
        "name": "constant",
        "command": "simulate",
        "parameters": {
            "system": "euler",
            "scenario": {
                "gas": { "kappa": 1.4 },
                "background": [1.0, 1.0, 0.0],
                "waves": [],
                "x0": 0.0,
                "x1": 1.0,
                "nx": 60,
                "t_end": 0.1,
                "convention": "negated"
            },
            "stride": 1
        }
    })
}

#[test]
fn sound_pair_is_quasi_rectifiable() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "pair.json", &pair_analysis());
    let out = wavelab(&["analyze", "--config", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let summary = stdout_json(&out);
    assert_eq!(summary["status"], "ok");
    let doc = read_json(dir.path().join("o/analyze.json"));
    let fam = &doc["report"]["families"][0];
    assert_eq!(fam["family"], serde_json::json!(["gamma+", "gamma-"]));
    assert_eq!(fam["quasi_rectifiable"], true);
    assert_eq!(doc["report"]["rescaling"]["report"]["holds"], true);
}

#[test]
fn constant_data_gives_identical_frames() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &constant_simulation());
    let out = wavelab(&["simulate", "--config", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("o/simulate.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').collect()).collect();
    let nx = 60;
    assert!(rows.len() >= 2 * nx && rows.len().is_multiple_of(nx));
    let first: Vec<&[&str]> = rows[..nx].iter().map(|r| &r[2..]).collect();
    for frame in rows.chunks(nx) {
        let states: Vec<&[&str]> = frame.iter().map(|r| &r[2..]).collect();
        assert_eq!(states, first);
    }
}

#[test]
fn geometry_preset_flags_the_second_form() {
    let dir = TempDir::new().unwrap();
    let out = wavelab(&["geometry", "--preset", "phi-geometry", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let summary = stdout_json(&out);
    assert_eq!(summary["status"], "discrepancy");
    let l = summary["discrepancies"].as_array().unwrap().iter().find(|d| d["id"] == "second-form-L").expect("L flagged");
    let ratio = l["reference"].as_f64().unwrap() / l["measured"].as_f64().unwrap();
    assert!((ratio - 2.0).abs() <= 1e-9, "{ratio}");
    let doc = read_json(dir.path().join("o/geometry.json"));
    assert_eq!(doc["discrepancies"], summary["discrepancies"]);
}

#[test]
fn unknown_keys_are_rejected_with_a_json_error() {
    let dir = TempDir::new().unwrap();
    let mut doc = pair_analysis();
    doc["parameters"]["kapa"] = 2.0.into();
    let cfg = write_config(dir.path(), "bad.json", &doc);
    let out = wavelab(&["analyze", "--config", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = stdout_json(&out);
    assert_eq!(err["error"]["kind"], "schema");
    assert!(err["error"]["message"].as_str().unwrap().contains("kapa"));
    assert!(!dir.path().join("o").exists());

    let mut top = pair_analysis();
    top["extra"] = 1.into();
    let cfg = write_config(dir.path(), "bad2.json", &top);
    let out = wavelab(&["run", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["error"]["kind"], "schema");
}

#[test]
fn missing_config_and_wrong_command_are_errors() {
    let dir = TempDir::new().unwrap();
    let out = wavelab(&["analyze", "--config", "nope.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["error"]["kind"], "io");

    let out = wavelab(&["algebra", "--preset", "phi-geometry"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["error"]["kind"], "usage");

    let out = wavelab(&["run", "--preset", "no-such-preset"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let out = wavelab(&["analyze"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["error"]["kind"], "usage");
}

#[test]
fn invalid_physics_is_reported_as_such() {
    let dir = TempDir::new().unwrap();
    let mut doc = constant_simulation();
    doc["parameters"]["scenario"]["background"] = serde_json::json!([-1.0, 1.0, 0.0]);
    let cfg = write_config(dir.path(), "neg.json", &doc);
    let out = wavelab(&["simulate", "--config", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["error"]["kind"], "invalid-parameter");
}

#[test]
fn runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "pair.json", &pair_analysis());
    for out_dir in ["a", "b"] {
        assert_eq!(wavelab(&["analyze", "--config", cfg.to_str().unwrap(), "--out", out_dir], dir.path()).status.code(), Some(0));
    }
    for f in ["analyze.json", "analyze.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }

    for out_dir in ["c", "d"] {
        assert_eq!(wavelab(&["run", "--preset", "reduced-kappa3", "--out", out_dir], dir.path()).status.code(), Some(0));
    }
    for f in ["reduced.json", "reduced.csv"] {
        assert_eq!(std::fs::read(dir.path().join("c").join(f)).unwrap(), std::fs::read(dir.path().join("d").join(f)).unwrap(), "{f}");
    }
    let svg = |d: &str| std::fs::read_to_string(dir.path().join(d).join("reduced.svg")).unwrap();
    assert_eq!(svg("c"), svg("d"));
}

#[test]
fn every_output_carries_version_seed_and_tolerances() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "pair.json", &pair_analysis());
    let out = wavelab(&["analyze", "--config", cfg.to_str().unwrap(), "--out", "o", "--seed", "42"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["seed"], 42);

    let doc = read_json(dir.path().join("o/analyze.json"));
    let header = &doc["header"];
    assert_eq!(header["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(header["seed"], 42);
    assert!(header["tolerances"].as_object().is_some_and(|t| !t.is_empty()));
    assert_eq!(doc["report"]["commutators"][0]["samples"], 300);

    let csv = std::fs::read_to_string(dir.path().join("o/analyze.csv")).unwrap();
    let head: Vec<&str> = csv.lines().take_while(|l| l.starts_with('#')).collect();
    assert!(head.iter().any(|l| l.contains(env!("CARGO_PKG_VERSION"))));
    assert!(head.iter().any(|l| l.contains("seed=42")));
    assert!(head.iter().any(|l| l.contains("tolerances:")));
}

#[test]
fn format_filter_limits_the_written_files() {
    let dir = TempDir::new().unwrap();
    let out = wavelab(&["run", "--preset", "reduced-kappa3", "--out", "o", "--format", "json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let mut files: Vec<_> = std::fs::read_dir(dir.path().join("o")).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert_eq!(files, ["reduced.json"]);

    let out = wavelab(&["run", "--preset", "reduced-kappa3", "--out", "p", "--format", "md"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["error"]["kind"], "usage");
}

#[test]
fn presets_are_listed_and_printable() {
    let dir = TempDir::new().unwrap();
    let out = wavelab(&["presets"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let listing = String::from_utf8(out.stdout).unwrap();
    for name in ["elastic-spsm", "nonelastic-spe", "reduced-kappa3", "algebra-closure", "phi-geometry"] {
        assert!(listing.contains(name), "{name}");
    }

    let out = wavelab(&["presets", "reduced-kappa3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let path = dir.path().join("printed.json");
    std::fs::write(&path, &out.stdout).unwrap();
    let out = wavelab(&["simulate", "--config", path.to_str().unwrap(), "--out", "o", "--format", "csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}
