use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn suig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_suig"))
        .args(args)
        .output()
        .expect("suig runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn metrics_line() {
    let dir = TempDir::new().unwrap();
    let cfg = file(&dir, "c.cfg", "phi 3\nnode 0 W\nnode 2 W\nnode 5 W\n");
    let out = suig(&["metrics", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "m_init=6 o_init=3 h_init=3\n");
}

#[test]
fn parse_lists_alg2() {
    let out = suig(&["parse", "--rules", "alg2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("colors: W R B\n"));
    let labels: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(':').next().unwrap())
        .collect();
    assert_eq!(labels.first(), Some(&"R0"));
    assert_eq!(labels.last(), Some(&"R5c"));
}

#[test]
fn parse_file_and_reject_bad_file() {
    let dir = TempDir::new().unwrap();
    let good = file(&dir, "g.rules", "colors: W\nR1: E [@W!] ? :: ->\n");
    let out = suig(&["parse", "--rules", s(&good)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "colors: W\nR1: E [@W!] ? :: ->\n");
    let bad = file(&dir, "b.rules", "colors: W\nR1: E [@W!] ? ->\n");
    assert_eq!(suig(&["parse", "--rules", s(&bad)]).status.code(), Some(2));
    assert_eq!(
        suig(&["parse", "--rules", "/nonexistent.rules"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn run_writes_a_replayable_trace() {
    let dir = TempDir::new().unwrap();
    let cfg = file(&dir, "c.cfg", "phi 1\nnode 0 W\nnode 1 W\nnode 2 W\n");
    let tr = dir.path().join("out.tr");
    let out = suig(&[
        "run",
        "--config",
        s(&cfg),
        "--rules",
        "alg2",
        "--horizon",
        "100",
        "--trace",
        s(&tr),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("outcome: gathered@1 round=2"));
    let trace = fs::read_to_string(&tr).unwrap();
    assert!(trace.starts_with("trace v1 phi=1 rules="));
    assert!(trace.ends_with("outcome: gathered@1 round=2\n"));

    let again = suig(&[
        "run",
        "--config",
        s(&cfg),
        "--rules",
        "alg2",
        "--replay",
        s(&tr),
    ]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(stdout(&again), "replay: identical\n");

    fs::write(&tr, trace.replace("fired: 0=R1", "fired: 0=R2a")).unwrap();
    let tampered = suig(&[
        "run",
        "--config",
        s(&cfg),
        "--rules",
        "alg2",
        "--replay",
        s(&tr),
    ]);
    assert_eq!(tampered.status.code(), Some(1));
    assert_eq!(stdout(&tampered), "replay: diverged at round 0\n");
}

#[test]
fn run_is_byte_stable_and_takes_a_scenario() {
    let dir = TempDir::new().unwrap();
    let cfg = file(
        &dir,
        "c.cfg",
        "phi 2\nnode 0 W*2\nnode 2 W*2\nnode 3 W*2\nnode 5 W*2\nnode 6 W*2\n",
    );
    let sc = file(&dir, "s.txt", "crash 1 0 mid\n");
    let a = dir.path().join("a.tr");
    let b = dir.path().join("b.tr");
    for t in [&a, &b] {
        let out = suig(&[
            "run",
            "--config",
            s(&cfg),
            "--rules",
            "alg2",
            "--scenario",
            s(&sc),
            "--trace",
            s(t),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    assert!(String::from_utf8(text).unwrap().contains("0:R!"));
}

#[test]
fn run_input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let far = file(&dir, "far.cfg", "phi 1\nnode 0 W\nnode 3 W\n");
    assert_eq!(
        suig(&["run", "--config", s(&far), "--rules", "alg1"])
            .status
            .code(),
        Some(2)
    );
    let cfg = file(&dir, "c.cfg", "phi 1\nnode 0 W\nnode 1 W\n");
    let sc = file(&dir, "s.txt", "crash 9 0 pre\n");
    let out = suig(&[
        "run",
        "--config",
        s(&cfg),
        "--rules",
        "alg1",
        "--scenario",
        s(&sc),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(suig(&["run", "--config", s(&cfg)]).status.code(), Some(2));
    assert_eq!(suig(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn sweep_passes_and_report_is_job_independent() {
    let dir = TempDir::new().unwrap();
    let spec = file(
        &dir,
        "alg1.spec",
        "rules = alg1\nparity_m = odd\nm_min = 3\nm_max = 7\nrobots_per_node = 2\ncrash_events_max = 1\nbound = 2*m\n",
    );
    let one = dir.path().join("one.txt");
    let four = dir.path().join("four.txt");
    let out = suig(&[
        "sweep",
        "--spec",
        s(&spec),
        "--report",
        s(&one),
        "--jobs",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("verdict: PASS"));
    let out = suig(&[
        "sweep",
        "--spec",
        s(&spec),
        "--report",
        s(&four),
        "--jobs",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read(&one).unwrap(), fs::read(&four).unwrap());
    assert!(!dir.path().join("one.txt.failures").exists());
}

#[test]
fn sweep_failures_become_replayable_bundles() {
    let dir = TempDir::new().unwrap();
    let spec = file(&dir, "even.spec", "parity_m = even\nm_min = 2\nm_max = 4\n");
    let report = dir.path().join("r.txt");
    let out = suig(&[
        "sweep",
        "--spec",
        s(&spec),
        "--rules",
        "alg1",
        "--report",
        s(&report),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("verdict: FAIL"));
    let bundle = dir.path().join("r.txt.failures").join("failure-0000");
    let replay = suig(&[
        "run",
        "--config",
        s(&bundle.join("config.cfg")),
        "--rules",
        s(&bundle.join("rules.rules")),
        "--scenario",
        s(&bundle.join("scenario.txt")),
        "--replay",
        s(&bundle.join("trace.tr")),
    ]);
    assert_eq!(stdout(&replay), "replay: identical\n");
    assert_eq!(replay.status.code(), Some(0));
}

#[test]
fn sweep_spec_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let spec = file(&dir, "bad.spec", "colour = red\n");
    assert_eq!(
        suig(&["sweep", "--spec", s(&spec), "--rules", "alg1"])
            .status
            .code(),
        Some(2)
    );
    let norules = file(&dir, "n.spec", "m_max = 3\n");
    assert_eq!(
        suig(&["sweep", "--spec", s(&norules)]).status.code(),
        Some(2)
    );
}

#[test]
fn sweep_resolves_rule_files_next_to_the_spec() {
    let dir = TempDir::new().unwrap();
    file(&dir, "mine.rules", builtin_alg1());
    let spec = file(
        &dir,
        "s.spec",
        "rules = mine.rules\nparity_m = odd\nm_min = 3\nm_max = 5\n",
    );
    let out = suig(&["sweep", "--spec", s(&spec)]);
    assert_eq!(out.status.code(), Some(0));
}

fn builtin_alg1() -> &'static str {
    "colors: W\nR0: E^phi [@W!] E^phi :: .\nR1: E^phi [@W!] !(E^phi) :: ->\n"
}

#[test]
fn check_symmetric_exit_codes() {
    let dir = TempDir::new().unwrap();
    let pair = file(&dir, "pair.cfg", "phi 1\nnode 0 W\nnode 1 W\n");
    let out = suig(&[
        "check-symmetric",
        "--config",
        s(&pair),
        "--rules",
        "alg2",
        "--horizon",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).ends_with("verdict: PASS\n"));
    let lopsided = file(&dir, "l.cfg", "phi 1\nnode 0 W\nnode 1 W\nnode 2 W\n");
    assert_eq!(
        suig(&[
            "check-symmetric",
            "--config",
            s(&lopsided),
            "--rules",
            "alg2"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn check_symmetric_reports_broken_symmetry() {
    // Moving rules read the same both ways round, so the run stops early.
    let dir = TempDir::new().unwrap();
    let rules = file(&dir, "both.rules", "colors: W\nR1: ? [@W] ? :: ->\n");
    let pair = file(&dir, "pair.cfg", "phi 1\nnode 0 W\nnode 1 W\n");
    let out = suig(&[
        "check-symmetric",
        "--config",
        s(&pair),
        "--rules",
        s(&rules),
        "--horizon",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    assert!(stdout(&out).contains("error: "));
    assert!(stdout(&out).ends_with("verdict: FAIL\n"));
}

#[test]
fn ssync_search_witness() {
    let dir = TempDir::new().unwrap();
    let cfg = file(&dir, "c.cfg", "phi 1\nnode 0 W\nnode 1 W\nnode 2 W\n");
    let witness = dir.path().join("w.sched");
    let out = suig(&[
        "ssync-search",
        "--config",
        s(&cfg),
        "--rules",
        "alg2",
        "--horizon",
        "50",
        "--expect",
        "witness",
        "--witness-out",
        s(&witness),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("replay: outcome: timeout horizon=50"));
    let sched = fs::read_to_string(&witness).unwrap();
    assert!(sched.starts_with("ssync\nround 0:"));

    let run = suig(&[
        "run",
        "--config",
        s(&cfg),
        "--rules",
        "alg2",
        "--schedule",
        s(&witness),
        "--horizon",
        "50",
    ]);
    assert!(stdout(&run).contains("outcome: timeout horizon=50"));

    let expect_none = suig(&[
        "ssync-search",
        "--config",
        s(&cfg),
        "--rules",
        "alg2",
        "--expect",
        "none",
    ]);
    assert_eq!(expect_none.status.code(), Some(1));
}

#[test]
fn ssync_search_full_activation_and_budget() {
    let dir = TempDir::new().unwrap();
    let cfg = file(&dir, "c.cfg", "phi 1\nnode 0 W\nnode 1 W\nnode 2 W\n");
    let out = suig(&[
        "ssync-search",
        "--config",
        s(&cfg),
        "--rules",
        "alg2",
        "--full-activation",
        "--expect",
        "none",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("search: no witness"));
    let out = suig(&[
        "ssync-search",
        "--config",
        s(&cfg),
        "--rules",
        "alg2",
        "--full-activation",
        "--budget",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("budget"));
}
