use std::path::Path;
use std::process::{Command, Output};

use pshlab::{ResultRecord, ScenarioConfig, SweepRow};
use pshlab_core::surface::build_torus;
use pshlab_core::surface::io::mesh_to_string;

fn pshlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pshlab")).args(args).env_remove("PSHLAB_THREADS").output().unwrap()
}

fn last_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.lines().last().expect("some output")).unwrap()
}

/// Small flat scenario: 8x8 then 16x16 torus.
fn torus_config(dir: &Path) -> ScenarioConfig {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/torus_identity.toml")).unwrap();
    let mut cfg = ScenarioConfig::from_toml(&text).unwrap();
    cfg.scenario.level = 1;
    cfg.output.dir = dir.join("out");
    cfg
}

fn write_config(dir: &Path, cfg: &ScenarioConfig) -> String {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, cfg.to_toml()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn print_config_round_trips() {
    let out = pshlab(&["print-config"]);
    assert!(out.status.success());
    let cfg = ScenarioConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg, ScenarioConfig::default());

    let tmp = tempfile::tempdir().unwrap();
    let mine = torus_config(tmp.path());
    let path = write_config(tmp.path(), &mine);
    let out = pshlab(&["print-config", "--config", &path, "--level", "0", "--mu", "const:0.1:0.2"]);
    let back = ScenarioConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(back.scenario.level, 0);
    assert_eq!(back.scenario.surface, mine.scenario.surface);
    assert_eq!(back.scenario.mu, "const:0.1:0.2".into());
}

#[test]
fn configuration_errors_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, ScenarioConfig::default().to_toml() + "\nunknown = 1\n").unwrap();
    assert_eq!(pshlab(&["certify", "--config", bad.to_str().unwrap()]).status.code(), Some(4));
    assert_eq!(pshlab(&["solve", "--mu", "random:oops"]).status.code(), Some(4));
    assert_eq!(pshlab(&["solve", "--config", "/nonexistent.toml"]).status.code(), Some(4));
    let out = Command::new(env!("CARGO_BIN_EXE_pshlab"))
        .args(["print-config"])
        .env("PSHLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn validate_mesh_accepts_and_rejects() {
    let tmp = tempfile::tempdir().unwrap();
    let good = tmp.path().join("torus.json");
    std::fs::write(&good, mesh_to_string(&build_torus(3).unwrap())).unwrap();
    let out = pshlab(&["validate-mesh", good.to_str().unwrap()]);
    assert!(out.status.success());
    let v = last_json(&out);
    assert_eq!(v["valid"], true);
    assert_eq!(v["faces"], 18);

    let mut doc: serde_json::Value = serde_json::from_str(&mesh_to_string(&build_torus(3).unwrap())).unwrap();
    doc["faces"].as_array_mut().unwrap().pop();
    let broken = tmp.path().join("broken.json");
    std::fs::write(&broken, doc.to_string()).unwrap();
    let out = pshlab(&["validate-mesh", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(last_json(&out)["valid"], false);
}

#[test]
fn solver_failure_exits_3_with_stage() {
    let tmp = tempfile::tempdir().unwrap();
    // the torus starts at its harmonic map; the octagon surface does not
    let mut cfg = ScenarioConfig::default();
    cfg.scenario.level = 0;
    cfg.scenario.solver.max_iters = 1;
    cfg.output.dir = tmp.path().join("out");
    let path = write_config(tmp.path(), &cfg);
    let out = pshlab(&["certify", "--config", &path]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(last_json(&out)["stage"], "solve");
}

#[test]
fn certify_writes_artifacts_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = torus_config(tmp.path());
    let path = write_config(tmp.path(), &cfg);
    let first = pshlab(&["certify", "--config", &path]);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stdout));
    let second = pshlab(&["certify", "--config", &path]);
    assert_eq!(last_json(&first)["digest"], last_json(&second)["digest"]);

    let dir = &cfg.output.dir;
    let rec: ResultRecord =
        serde_json::from_str(&std::fs::read_to_string(dir.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(rec.config_hash, cfg.hash());
    assert_eq!(rec.digest(), last_json(&second)["digest"].as_str().unwrap());
    assert_eq!(rec.certificate.rho, 0.0);
    let refinement = std::fs::read_to_string(dir.join("certificate_refinement.csv")).unwrap();
    assert_eq!(refinement.lines().count(), 3);
    let grid = std::fs::read_to_string(dir.join("certificate_egrid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 14);
}

#[test]
fn sweep_summary_has_one_row_per_direction() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = torus_config(tmp.path());
    cfg.sweep.count = 3;
    cfg.sweep.include_zero = true;
    let path = write_config(tmp.path(), &cfg);
    let out = pshlab(&["sweep", "--config", &path, "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let mut reader = csv::Reader::from_path(cfg.output.dir.join("summary.csv")).unwrap();
    let rows: Vec<SweepRow> = reader.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), cfg.sweep_directions().len());
    assert_eq!(rows[0].direction, "zero");
    assert_eq!(rows[0].delta_e, 0.0);
    assert!(rows.iter().all(|r| r.verdict == "PASS"));
}
