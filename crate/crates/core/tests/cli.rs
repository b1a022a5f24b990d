use std::path::Path;
use std::process::{Command, Output};

fn prosody<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prosody")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn ok<S: AsRef<std::ffi::OsStr> + std::fmt::Debug>(args: &[S]) -> String {
    let out = prosody(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

fn pipeline(root: &Path) {
    let s = |p: &str| root.join(p).to_str().unwrap().to_string();
    let sets = ["--set", "salience.epochs=1", "--set", "agent.steps=6", "--seed", "3"];
    let with = |args: &[&str]| -> Vec<String> { args.iter().chain(&sets).map(|a| a.to_string()).collect() };
    ok(&with(&["gen-corpus", "--out", &s("corpus"), "--per-class", "2", "--holdout", "0.5"]));
    ok(&with(&["train-salience", "--manifest", &s("corpus/train.csv"), "--out", &s("sal")]));
    ok(&with(&["eval-salience", "--manifest", &s("corpus/test.csv"), "--model", &s("sal/salience.prsm"), "--out", &s("eval")]));
    ok(&with(&["train-agent", "--manifest", &s("corpus/train.csv"), "--salience", &s("sal/salience.prsm"), "--out", &s("agent")]));
    ok(&with(&[
        "convert",
        "--manifest",
        &s("corpus/test.csv"),
        "--agent",
        &s("agent/agent.prsm"),
        "--salience",
        &s("sal/salience.prsm"),
        "--out",
        &s("conv"),
        "--greedy",
    ]));
}

#[test]
fn end_to_end_pipeline_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    pipeline(b.path());

    let conf = String::from_utf8(read(a.path().join("eval/confusion.csv"))).unwrap();
    let rows: Vec<&str> = conf.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    let total: usize = rows.iter().flat_map(|r| r.split(',').skip(1)).map(|c| c.parse::<usize>().unwrap()).sum();
    assert_eq!(total, 5);

    let changes = String::from_utf8(read(a.path().join("conv/score_changes.csv"))).unwrap();
    assert_eq!(changes.lines().count(), 1 + 5);
    let agent_log = String::from_utf8(read(a.path().join("agent/training_log.csv"))).unwrap();
    assert_eq!(agent_log.lines().count(), 1 + 6);
    assert!(a.path().join("sal/checkpoints").is_dir());
    assert!(a.path().join("sal/config.txt").is_file());

    for f in [
        "corpus/manifest.csv",
        "sal/training_log.csv",
        "sal/salience.prsm",
        "eval/metrics.csv",
        "eval/confusion.csv",
        "agent/training_log.csv",
        "agent/agent.prsm",
        "conv/score_changes.csv",
    ] {
        assert_eq!(read(a.path().join(f)), read(b.path().join(f)), "{f}");
    }
}

#[test]
fn single_file_convert_and_stretch() {
    let dir = tempfile::tempdir().unwrap();
    let s = |p: &str| dir.path().join(p).to_str().unwrap().to_string();
    ok(&["gen-corpus", "--out", &s("c"), "--per-class", "1"]);
    ok(&["--set", "salience.epochs=1", "train-salience", "--manifest", &s("c/manifest.csv"), "--out", &s("sal")]);
    ok(&[
        "--set",
        "agent.steps=2",
        "train-agent",
        "--manifest",
        &s("c/manifest.csv"),
        "--salience",
        &s("sal/salience.prsm"),
        "--out",
        &s("agent"),
    ]);
    let report = ok(&[
        "convert",
        "--in",
        &s("c/happy_0000.wav"),
        "--target",
        "sad",
        "--agent",
        &s("agent/agent.prsm"),
        "--salience",
        &s("sal/salience.prsm"),
        "--out",
        &s("out.wav"),
    ]);
    assert!(report.starts_with("segment_start,segment_end,alpha,beta,gain"));
    assert!(report.lines().any(|l| l.starts_with("target sad change ")));
    assert!(dir.path().join("out.wav").is_file());

    let msg = ok(&["stretch", "--in", &s("c/happy_0000.wav"), "--out", &s("slow.wav"), "--factor", "1.5"]);
    let (n_in, n_out) = msg.trim().split_once(" -> ").unwrap();
    let n_in: f64 = n_in.parse().unwrap();
    let n_out: f64 = n_out.trim_end_matches(" samples").parse().unwrap();
    assert!((n_out / n_in - 1.5).abs() < 0.01);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(prosody::<&str>(&[]).status.code(), Some(2));
    assert_eq!(prosody(&["stretch"]).status.code(), Some(2));
    assert_eq!(prosody(&["--set", "nope=1", "selfcheck"]).status.code(), Some(2));
    assert_eq!(prosody(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = prosody(&["stretch", "--in", "/nonexistent.wav", "--out", dir.path().join("x.wav").to_str().unwrap(), "--factor", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn selfcheck_reports_pass() {
    let out = ok(&["selfcheck"]);
    assert!(out.lines().count() >= 3);
    assert!(!out.contains("FAIL"));
}
