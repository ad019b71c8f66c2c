use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "group = cyclic\norder = 3\nlambda = 0.8, 1.6\nn = 150\ntrials = 3\nseed = 11\n\
                     estimators = amp, spectral, soft-threshold\n";

fn groupsync(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groupsync")).args(args).current_dir(dir).output().unwrap()
}

fn run_small(dir: &Path, workers: &str) -> Vec<u8> {
    std::fs::write(dir.join("small.conf"), SMALL).unwrap();
    let out = groupsync(&["run", "--config", "small.conf", "--workers", workers], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let one = run_small(dir.path(), "1");
    let three = run_small(dir.path(), "3");
    assert_eq!(one, three);
}

#[test]
fn run_output_layout() {
    let dir = tempfile::tempdir().unwrap();
    let text = String::from_utf8(run_small(dir.path(), "2")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "group,K,lambda,n,trial,seed,estimator,correlation,log_error,iterations,wall_time_ms,error");
    // 2 λ × 3 trials × 3 estimators
    assert_eq!(lines.len(), 1 + 18 + 1);
    assert!(lines[1].contains(",0.8,150,0,") && lines[1].contains(",amp,"));
    assert!(lines[3].contains(",soft-threshold,"));
    assert!(lines[18].contains(",1.6,150,2,"));
    let meta = lines.last().unwrap();
    assert!(meta.starts_with("# version=0.1.0 seed=11 config_hash="), "{meta}");
    assert_eq!(meta.rsplit('=').next().unwrap().len(), 64);
}

#[test]
fn seed_override_changes_rows_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.conf"), SMALL).unwrap();
    let base = groupsync(&["run", "--config", "small.conf"], dir.path());
    let other = groupsync(&["run", "--config", "small.conf", "--seed", "12"], dir.path());
    assert!(base.status.success() && other.status.success());
    assert_ne!(base.stdout, other.stdout);
    assert!(String::from_utf8(other.stdout).unwrap().contains("# version=0.1.0 seed=12 "));
}

#[test]
fn configuration_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("typo.conf"), "group = cyclic\norder = 3\nlambda = 1\nlamda = 2\n").unwrap();
    std::fs::write(p.join("bad.conf"), "group = cyclic\norder = 1\nlambda = 1\n").unwrap();
    for args in [
        &["run", "--config", "typo.conf"][..],
        &["run", "--config", "bad.conf"],
        &["run", "--config", "missing.conf"],
        &["reproduce-figure", "no-such-figure"],
        &["run", "--config", "typo.conf", "--workers", "0"],
        &["frobnicate"],
    ] {
        let out = groupsync(args, p);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn analysis_config_is_refused_by_run() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("se.conf"), "mode = se-vs-amp\ngroup = u1\nlambda = 1.5\n").unwrap();
    let out = groupsync(&["run", "--config", "se.conf"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = groupsync(&["validate"], dir.path());
    assert!(out.status.success());
    assert!(!String::from_utf8(out.stdout).unwrap().contains("FAIL"));
}

#[test]
fn sample_writes_instance_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.conf"), SMALL).unwrap();
    let out = groupsync(&["sample", "--config", "small.conf", "--out", "inst"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("inst.bin").exists() && dir.path().join("inst.json").exists());
}

#[test]
fn presets_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let out = groupsync(&["reproduce-figure", "list"], dir.path());
    let names = String::from_utf8(out.stdout).unwrap();
    for n in ["z2-compare", "a4-phase", "z25-trajectory"] {
        assert!(names.lines().any(|l| l == n), "{n}");
    }
}
