use std::fs;
use std::process::Command;

fn hallmhd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hallmhd"))
}

const SMALL: &str = r#"
grid.n = 16
grid.l = 16.0
initial.blobs = [{ center = [0.0, 0.0, 0.0], width = 2.0, u_amplitude = [1.0, 0.0, 0.0], b_amplitude = [0.0, 1.0, 0.0] }]
step.t_end = 1.0
step.dt_max = 0.25
output.dir = "never-used"
"#;

#[test]
fn predict_prints_exponent_or_rejection() {
    let out = hallmhd().args(["predict", "--field", "u", "--a", "0", "--b", "0", "--p", "2"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "-0.75");
    let out = hallmhd().args(["predict", "--field", "u", "--a", "3", "--b", "0", "--p", "2"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "out-of-validity");
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    let out = hallmhd().args(["predict", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = hallmhd().args(["run", "/nonexistent/config.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "grid.n = 15\nunknown_key = 1\n").unwrap();
    let out = hallmhd().arg("run").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn output_dir_env_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let out_dir = dir.path().join("artifacts");
    let out = hallmhd()
        .args(["--json", "run"])
        .arg(&cfg)
        .env("HALLMHD_OUTPUT_DIR", &out_dir)
        .current_dir(dir.path())
        .output()
        .unwrap();
    // No fit window exists on a box this small, so the run completes but fails.
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["norms.csv", "report.json", "run_meta.json", "config.toml", "final.ckpt"] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }
    assert!(!dir.path().join("never-used").exists());
    let printed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let written: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(printed, written);

    let again = hallmhd().arg("analyze").arg(out_dir.join("norms.csv")).arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(again.status.code(), Some(1));
}
