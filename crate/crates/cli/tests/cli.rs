use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn simbt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simbt")).args(args).output().unwrap()
}

fn transcript() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures/pairing_1234.txt")
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn crack_finds_pin() {
    let o = simbt(&[
        "crack",
        "--transcript",
        &transcript(),
        "--addr-a",
        "0000fbfd7fd1",
        "--addr-b",
        "00:00:5a:3c:4d:2e",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("1234"));
}

#[test]
fn crack_wrong_addresses_is_runtime_failure() {
    let o = simbt(&[
        "crack",
        "--transcript",
        &transcript(),
        "--addr-a",
        "00:00:5a:3c:4d:2e",
        "--addr-b",
        "00:00:fb:fd:7f:d1",
        "--max-digits",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn crack_bad_address_is_config_error() {
    let o = simbt(&[
        "crack",
        "--transcript",
        &transcript(),
        "--addr-a",
        "zz",
        "--addr-b",
        "00:00:5a:3c:4d:2e",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_transcript_is_config_error() {
    let o = simbt(&[
        "crack",
        "--transcript",
        "/nonexistent/t.txt",
        "--addr-a",
        "0000fbfd7fd1",
        "--addr-b",
        "00005a3c4d2e",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_scenario_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.scenario");
    fs::write(&p, "rf = foggy\n").unwrap();
    let o = simbt(&["run", "--scenario", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn unknown_subcommand_is_config_error() {
    assert_eq!(simbt(&["fly"]).status.code(), Some(1));
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("s.scenario");
    fs::write(
        &scen,
        "master = m\ntarget = t\nruns = 2\ntime_bound_s = 3\nwarmup_s = 1\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_simbt"))
        .args(["run", "--scenario", scen.to_str().unwrap()])
        .env("SIMBT_OUT_DIR", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let run_dir = out.join("m-t-Quiet");
    let csv = fs::read_to_string(run_dir.join("metrics.csv")).unwrap();
    assert!(stdout(&o).contains(csv.lines().nth(1).unwrap()));
    assert!(run_dir.join("run2.console").is_file());

    fs::remove_file(run_dir.join("metrics.csv")).unwrap();
    let r = simbt(&["report", "--dir", run_dir.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(fs::read_to_string(run_dir.join("metrics.csv")).unwrap(), csv);
}

#[test]
fn report_on_empty_dir_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        simbt(&["report", "--dir", dir.path().to_str().unwrap()]).status.code(),
        Some(2)
    );
}
