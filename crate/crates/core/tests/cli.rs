use std::path::Path;
use std::process::Command;

fn ls2d(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ls2d")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn direct_run_writes_report_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"problem": {"potential": {"kind": "gaussian"}, "kappa": 25, "grid": {"n": 20}}, "output": {"field": true}}"#,
    );
    let out = dir.path().join("out");
    let o = ls2d(&["direct", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let printed: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let saved: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(printed["N"], 400);
    assert_eq!(printed["res"], saved["res"]);
    assert!(out.join("total_field.csv").exists() && out.join("total_field.lsf").exists());
}

#[test]
fn non_convergence_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"problem": {"potential": {"kind": "lens"}, "kappa": 25, "grid": {"n": 20}}, "gmres": {"tol": 1e-14, "maxit": 2}}"#,
    );
    assert_eq!(ls2d(&["pgmres", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(
        dir.path(),
        "u.json",
        r#"{"problem": {"potential": {"kind": "zero"}, "kappa": 1, "grid": {"n": 4}}, "tolerance": 1}"#,
    );
    let o = ls2d(&["direct", "--config", &unknown]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tolerance"));

    let order = write_config(
        dir.path(),
        "o.json",
        r#"{"problem": {"potential": {"kind": "zero"}, "kappa": 1, "grid": {"n": 4}, "order": 10}}"#,
    );
    let o = ls2d(&["direct", "--config", &order]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not supported"));

    let good = write_config(dir.path(), "g.json", r#"{"problem": {"potential": {"kind": "zero"}, "kappa": 1, "grid": {"n": 4}}}"#);
    assert_eq!(ls2d(&["solve", "--config", &good]).status.code(), Some(1));
    assert_eq!(ls2d(&["direct", "--config", "/nonexistent/c.json"]).status.code(), Some(1));
    assert_eq!(ls2d(&["direct"]).status.code(), Some(1));
}
