use std::path::PathBuf;
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qap-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn qap(args: &[&str], config_dir: Option<&PathBuf>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qap"));
    cmd.args(args).env_remove("QAP_CONFIG_DIR");
    if let Some(dir) = config_dir {
        cmd.env("QAP_CONFIG_DIR", dir);
    }
    cmd.output().unwrap()
}

#[test]
fn particle_stationary_prints_json() {
    let dir = scratch("particle");
    std::fs::write(dir.join("p.toml"), "[particle]\nmass = 1\nx0_final = 2\n").unwrap();
    let out = qap(&["particle", "stationary", "--config", "p.toml"], Some(&dir));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"t_star\": 1.0000000000000000e0"));
    assert!(text.contains("\"lambda_star\": 2.0000000000000000e0"));
}

#[test]
fn string_stationary_writes_csv_file() {
    let dir = scratch("string");
    let cfg = dir.join("s.toml");
    std::fs::write(&cfg, "[string]\nsigma_points = 4\ntau_steps = 12\ngamma = 0.3\nx0_final = 1.0\n").unwrap();
    let target = dir.join("nested/result.csv");
    let args = [
        "string",
        "stationary",
        "--config",
        cfg.to_str().unwrap(),
        "--occupations",
        "1,0,0",
        "--format",
        "csv",
        "--out",
        target.to_str().unwrap(),
    ];
    let first = qap(&args, None);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let a = std::fs::read(&target).unwrap();
    assert_eq!(qap(&args, None).status.code(), Some(0));
    assert_eq!(a, std::fs::read(&target).unwrap());
    assert!(String::from_utf8(a).unwrap().contains("# grid.sigma_points = 4"));
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = scratch("errors");
    std::fs::write(dir.join("bad.toml"), "[particle]\nmass = -1\nx0_final = 2\n").unwrap();
    let out = qap(&["particle", "stationary", "--config", "bad.toml"], Some(&dir));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("\"kind\": \"validation\"") && err.contains("particle.mass"), "{err}");

    let out = qap(&["particle", "stationary", "--config", "missing.toml"], Some(&dir));
    assert_eq!(out.status.code(), Some(4));

    std::fs::write(dir.join("deg.toml"), "[particle]\nmass = 0\nx0_final = 2\n").unwrap();
    let out = qap(&["particle", "phase", "--config", "deg.toml"], Some(&dir));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stdout).unwrap().contains("degenerate_scale"));
}

#[test]
fn empty_sweep_succeeds() {
    let dir = scratch("sweep");
    std::fs::write(
        dir.join("w.toml"),
        "system = \"particle\"\n[particle]\nmass = 1\nx0_final = 1\n\
         [sweep]\nparameter = \"mass\"\nvalues = []\ncommand = \"stationary\"\n",
    )
    .unwrap();
    let out = qap(&["sweep", "--config", "w.toml", "--workers", "2"], Some(&dir));
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("\"results\": []"));
}
