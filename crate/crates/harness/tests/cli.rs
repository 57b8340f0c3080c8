use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "rounds = 2\nepochs = 2\n[stepsize]\ncount = 3\n";

fn weakcvx(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weakcvx"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn sweep(dir: &Path, config: &str, out: &str) -> (Output, Vec<u8>) {
    std::fs::write(dir.join("sweep.toml"), config).unwrap();
    let output = weakcvx(&["sweep", "--config", "sweep.toml", "--out", out], dir);
    let csv = std::fs::read(dir.join(out)).unwrap_or_default();
    (output, csv)
}

#[test]
fn sweep_writes_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    let (output, csv) = sweep(dir.path(), SMALL, "out.csv");
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("method,stepsize,round,final_gap,epochs_to_target,wall_ms,seed"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3 * 3 * 3);
    assert_eq!(rows.iter().filter(|r| r.split(',').nth(2) == Some("mean")).count(), 3 * 3);
}

#[test]
fn sweeps_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (_, a) = sweep(dir.path(), SMALL, "a.csv");
    let (_, b) = sweep(dir.path(), SMALL, "b.csv");
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn bad_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let (output, _) = sweep(dir.path(), "epochs = -1\n", "out.csv");
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("line 1"));
    let (output, _) = sweep(dir.path(), "[stepsize]\nmin = 2.0\nmax = 1.0\n", "out.csv");
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("stepsize.min"));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let pristine = weakcvx(&["verify", "--instances", "20"], dir.path());
    assert_eq!(pristine.status.code(), Some(0));
    assert!(!String::from_utf8_lossy(&pristine.stdout).contains("FAIL"));
    let faulty = weakcvx(&["verify", "--instances", "20", "--inject-fault", "phase-prox-linear"], dir.path());
    assert_eq!(faulty.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&faulty.stdout).contains("FAIL"));
    let unknown = weakcvx(&["verify", "--inject-fault", "nothing"], dir.path());
    assert_eq!(unknown.status.code(), Some(1));
}

#[test]
fn generate_and_trace_run() {
    let dir = tempfile::tempdir().unwrap();
    let generated = weakcvx(&["generate", "--preset", "phase-10-30", "--seed", "3"], dir.path());
    assert_eq!(generated.status.code(), Some(0));
    assert!(!generated.stdout.is_empty());
    let again = weakcvx(&["generate", "--preset", "phase-10-30", "--seed", "3"], dir.path());
    assert_eq!(generated.stdout, again.stdout);
    let trace = weakcvx(&["trace", "--epochs", "2", "--stepsize", "0.05"], dir.path());
    assert_eq!(trace.status.code(), Some(0), "{}", String::from_utf8_lossy(&trace.stderr));
    assert_eq!(String::from_utf8_lossy(&trace.stdout).lines().count(), 4);
}
