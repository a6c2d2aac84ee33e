use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gevlab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gevlab")).args(args).env("GEVLAB_OUT", out).output().unwrap()
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).display().to_string()
}

#[test]
fn lemmas_pass_and_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = gevlab(dir.path(), &["check", "lemmas", "--trials", "40"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("lemmas.record.json").exists());
    let csv = std::fs::read_to_string(dir.path().join("lemmas.csv")).unwrap();
    assert_eq!(csv.trim(), "experiment_id,t,m,alpha,theta,value,radical,path,warning");
}

#[test]
fn free_run_is_bit_identical_and_refits() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config("free-gaussian.toml");
    for d in [&a, &b] {
        let out = gevlab(d.path(), &["run", "free", "--config", &cfg]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    }
    for file in ["free-gaussian.csv", "free-gaussian.record.json"] {
        assert_eq!(std::fs::read(a.path().join(file)).unwrap(), std::fs::read(b.path().join(file)).unwrap());
    }
    let record = a.path().join("free-gaussian.record.json");
    let fit = gevlab(a.path(), &["fit", "gevrey", "--in", record.to_str().unwrap()]);
    assert!(fit.status.success());
    assert!(String::from_utf8_lossy(&fit.stdout).contains("\"rho\""));
}

#[test]
fn flags_override_config_and_failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    // epsilon = 1 removes the decay margin entirely, so the spread check fails
    let out = gevlab(dir.path(), &["fit", "decay", "--config", &config("decay-fit.toml"), "--epsilon", "1", "--id", "tight"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("decay-spread"));
    assert!(dir.path().join("tight.record.json").exists());
}

#[test]
fn bad_input_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = gevlab(dir.path(), &["run", "free", "--points", "1000"]);
    assert_eq!(out.status.code(), Some(2));
    let out = gevlab(dir.path(), &["run", "free", "--profile", "lorentz", "--profile-params", "1"]);
    assert_eq!(out.status.code(), Some(2));
}
