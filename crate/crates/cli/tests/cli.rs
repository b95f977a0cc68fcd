use std::path::{Path, PathBuf};
use std::process::Command;

use isacqcd::output::{sha256_hex, RunManifest, Table};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isacqcd"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn code(cmd: &mut Command) -> i32 {
    cmd.output().unwrap().status.code().unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(bin().args(["validate", "--config"]).arg(config("bibo_slope.toml"))), 0);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[channel]\nkind = \"discrete\"\nsensing = [[[0.5, 0.6]]]\ncomm = [[[1.0, 0.0]]]\n").unwrap();
    assert_eq!(code(bin().args(["validate", "--config"]).arg(&bad)), 2);

    let twins = dir.path().join("twins.toml");
    std::fs::write(
        &twins,
        "[channel]\nkind = \"discrete\"\nsensing = [[[0.9, 0.1]], [[0.6, 0.4]], [[0.6, 0.4]]]\ncomm = [[[1.0, 0.0]], [[1.0, 0.0]], [[1.0, 0.0]]]\n",
    )
    .unwrap();
    assert_eq!(code(bin().args(["validate", "--config"]).arg(&twins)), 2);

    let missing = dir.path().join("none.toml");
    assert_eq!(code(bin().args(["validate", "--config"]).arg(&missing)), 1);

    // clap rejects unknown subcommands with its own usage code
    assert_eq!(code(bin().arg("frobnicate")), 2);
}

#[test]
fn simulate_writes_valid_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("far.csv");
    let cfg = config("bibo_far_a001.toml");
    let status = bin()
        .args(["simulate", "far", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--trials", "300", "--seed", "9"])
        .status()
        .unwrap();
    assert!(status.success());
    let table = Table::from_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(table.columns[0], "message");
    assert!(table.rows.iter().all(|r| r.last().unwrap() == "9"));
    let m = RunManifest::read(&RunManifest::path_for(&out)).unwrap();
    assert_eq!(m.master_seed, 9);
    assert_eq!(m.trials, Some(300));
    assert_eq!(m.config_hash, sha256_hex(&std::fs::read(&cfg).unwrap()));
    assert_eq!(m.command, "simulate far");
}

#[test]
fn region_and_dump_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("beam.csv");
    assert_eq!(
        code(bin().args(["region", "beam-sweep", "--config"]).arg(config("beam.toml")).arg("--out").arg(&out)),
        0
    );
    let t = Table::from_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(t.rows.len(), 91);

    let out = dir.path().join("cap.csv");
    assert_eq!(
        code(bin().args(["region", "capacity", "--config"]).arg(config("bibo_region.toml")).arg("--out").arg(&out)),
        0
    );
    let t = Table::from_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let caps = t.floats("capacity_bits");
    assert_eq!(caps.len(), 2);
    assert!(caps.iter().all(|c| (c - caps[0]).abs() < 1e-12));

    let json = bin().args(["dump", "--config"]).arg(config("bibo_slope.toml")).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["block_length"], 17000);
    assert_eq!(v["threshold"], 100.0);
}

#[test]
fn open_loop_rejects_state_dependent_comm() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("dep.toml");
    std::fs::write(
        &cfg,
        "[channel]\nkind = \"discrete\"\nsensing = [[[0.9, 0.1], [0.1, 0.9]], [[0.7, 0.3], [0.3, 0.7]], [[0.6, 0.4], [0.2, 0.8]]]\ncomm = [[[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]], [[0.8, 0.2], [0.2, 0.8]]]\n",
    )
    .unwrap();
    let out = dir.path().join("o.csv");
    assert_eq!(code(bin().args(["region", "open-loop", "--config"]).arg(&cfg).arg("--out").arg(&out)), 1);
    assert!(!out.exists());
}
