use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
schema = "pathlind-config/1"
initial = "up"

[model]
kind = "spin_boson"
eps_cm = 20.0
delta_cm = 60.0
bath = { kind = "drude_lorentz", lambda_cm = 20.0, gamma_cm = 200.0, beta_fs = 20.0 }

[numerics]
dt_fs = 4.0
n_map_steps = 5
mem_len = 3
propagate_to_fs = 80.0

[[jump_sets]]
name = "closed"

[[jump_sets]]
name = "relax"
jumps = [{ re = [[0.0, 0.05], [0.0, 0.0]] }]

[output]
dir = "out"
observables = ["populations", "coherence(up,down)"]
"#;

fn pathlind(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathlind"))
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "info")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_twice_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), CONFIG).unwrap();

    let first = pathlind(dir.path(), &["--config", "run.toml", "run"]);
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(stderr(&first).contains("running path sum"));
    assert!(String::from_utf8_lossy(&first.stdout).contains("path-sum evaluations: 1"));
    let relax = dir.path().join("out/relax.dat");
    let closed = dir.path().join("out/closed.dat");
    assert!(relax.exists() && closed.exists());
    fs::copy(&relax, dir.path().join("first.dat")).unwrap();

    let second = pathlind(dir.path(), &["--config", "run.toml", "run"]);
    assert!(second.status.success());
    assert!(stderr(&second).contains("loaded"), "{}", stderr(&second));
    assert!(!stderr(&second).contains("running path sum"));

    let same = pathlind(dir.path(), &["compare", "first.dat", "out/relax.dat"]);
    assert_eq!(same.status.code(), Some(0));
    let diff = pathlind(dir.path(), &["compare", "out/closed.dat", "out/relax.dat"]);
    assert_eq!(diff.status.code(), Some(1));
}

#[test]
fn stages_can_be_run_separately() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    let maps = pathlind(dir.path(), &["--config", "run.toml", "maps"]);
    assert!(maps.status.success(), "{}", stderr(&maps));
    let ttm = pathlind(dir.path(), &["--config", "run.toml", "ttm"]);
    assert!(ttm.status.success());
    assert!(stderr(&ttm).contains("maps stage: loaded"));
    let prop = pathlind(dir.path(), &["--config", "run.toml", "propagate", "--no-jumps"]);
    assert!(prop.status.success());
    assert!(dir.path().join("out/no_jumps.dat").exists());
    assert!(!dir.path().join("out/relax.dat").exists());
}

#[test]
fn invalid_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), CONFIG.replace("mem_len = 3", "mem_len = 0")).unwrap();
    let out = pathlind(dir.path(), &["--config", "bad.toml", "run"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let missing = pathlind(dir.path(), &["--config", "nowhere.toml", "run"]);
    assert_ne!(missing.status.code(), Some(0));
}

#[test]
fn budget_refusal_exits_with_budget_code() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    let out = pathlind(dir.path(), &["--config", "run.toml", "--budget", "10", "maps"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(!dir.path().join(".pathlind-cache").exists() || fs::read_dir(dir.path().join(".pathlind-cache")).unwrap().next().is_none());
}
