use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fraclap"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fraclap-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_manifest(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn run(sub: &str, manifest: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(sub)
        .arg("--manifest")
        .arg(manifest)
        .arg("--out")
        .arg(out)
        .args(extra)
        .env_remove("FRACLAP_OUT")
        .output()
        .unwrap()
}

const HALFSPACE: &str = "format_version = \"1\"\nsubcommand = \"halfspace-suite\"\n";

#[test]
fn passing_run_writes_three_artifacts() {
    let dir = scratch("artifacts");
    let m = write_manifest(&dir, HALFSPACE);
    let out = run("halfspace-suite", &m, &dir.join("out"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["results.csv", "summary.jsonl", "manifest.toml"] {
        assert!(dir.join("out").join(f).exists(), "{f}");
    }
    let summary = fs::read_to_string(dir.join("out/summary.jsonl")).unwrap();
    for line in summary.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["passed"], true);
        assert!(v["anchor"].as_str().unwrap().starts_with("Eq-"));
    }
    let echoed = fs::read_to_string(dir.join("out/manifest.toml")).unwrap();
    assert!(echoed.contains("[halfspace-suite]"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = scratch("determinism");
    let m = write_manifest(
        &dir,
        "format_version = \"1\"\nsubcommand = \"verify-cordoba\"\nseed = 11\n\
         [domain]\nlengths = [3.0, 2.0]\nmodes = 6\nnodes = 12\n[verify-cordoba]\nsamples = 4\n",
    );
    let a = run("verify-cordoba", &m, &dir.join("a"), &[]);
    let b = run("verify-cordoba", &m, &dir.join("b"), &["--threads", "1"]);
    assert!(a.status.success() && b.status.success());
    for f in ["results.csv", "summary.jsonl", "manifest.toml"] {
        assert_eq!(fs::read(dir.join("a").join(f)).unwrap(), fs::read(dir.join("b").join(f)).unwrap(), "{f}");
    }
    let c = run("verify-cordoba", &m, &dir.join("c"), &["--seed", "12"]);
    assert!(c.status.success());
    assert_ne!(fs::read(dir.join("a/results.csv")).unwrap(), fs::read(dir.join("c/results.csv")).unwrap());
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let dir = scratch("config");
    let cfl = write_manifest(
        &dir,
        "format_version = \"1\"\nsubcommand = \"run-sqg\"\n[domain]\nlengths = [3.14, 3.14]\nmodes = 8\nnodes = 16\n\
         [run-sqg]\nruns = 1\nladder = []\n[run-sqg.evolution]\ndt = 0.5\nt_end = 1.0\n",
    );
    let out = run("run-sqg", &cfl, &dir.join("out"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("CFL"));

    let typo = write_manifest(
        &dir,
        "format_version = \"1\"\nsubcommand = \"verify-lower-bound\"\n[verify-lower-bound]\nalpah = 0.5\n",
    );
    let out = run("verify-lower-bound", &typo, &dir.join("out"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpah"));

    let m = write_manifest(&dir, HALFSPACE);
    let out = run("run-sqg", &m, &dir.join("out"), &[]);
    assert_eq!(out.status.code(), Some(2), "subcommand mismatch");
    let out = run("no-such-probe", &m, &dir.join("out"), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_assertion_exits_with_code_one() {
    let dir = scratch("failure");
    // an impossible tolerance turns the identity check into a failure
    let m = write_manifest(&dir, &format!("{HALFSPACE}[halfspace-suite]\ntolerance = 0.0\nkernel_tolerance = 0.0\n"));
    let out = run("halfspace-suite", &m, &dir.join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
    let summary = fs::read_to_string(dir.join("out/summary.jsonl")).unwrap();
    assert!(summary.contains("\"passed\":false"));
}

#[test]
fn output_directory_from_environment() {
    let dir = scratch("env");
    let m = write_manifest(&dir, HALFSPACE);
    let target = dir.join("from-env");
    let out = bin().args(["halfspace-suite", "--manifest"]).arg(&m).env("FRACLAP_OUT", &target).output().unwrap();
    assert!(out.status.success());
    assert!(target.join("summary.jsonl").exists());
}
