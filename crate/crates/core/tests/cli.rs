use std::process::Command;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mrac-rl"))
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = cli().args(["bench", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn selftest_passes() {
    let out = cli().arg("selftest").output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(!stdout.contains("[FAIL]"));
}

#[test]
fn episode_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.json");
    let out = cli()
        .args([
            "episode",
            "--form",
            "nonlinear",
            "--variant",
            "mrac100",
            "--env-seed",
            "3",
            "--export",
        ])
        .arg(&path)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rec =
        mrac_rl::harness::import_episode(&path, mrac_rl::harness::ExportFormat::Json).unwrap();
    assert_eq!(rec.times.len(), 2000);
}

#[test]
fn bad_config_reports_position_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, "[mrac]\ngamma_u = -1.0\n").unwrap();
    let out = cli()
        .arg("--config")
        .arg(&path)
        .args(["episode"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    std::fs::write(&path, "[run]\nnope = 1\n").unwrap();
    let out = cli()
        .arg("--config")
        .arg(&path)
        .args(["selftest"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn mlp_variant_needs_a_policy_file() {
    let out = cli()
        .args(["bench", "--n-envs", "2", "--variants", "mlp-mrac100"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn x0_takes_a_comma_pair() {
    let out = cli().args(["episode", "--x0", "0.1,0.2"]).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = cli()
        .args(["episode", "--x0", "0.1,0.2,3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
