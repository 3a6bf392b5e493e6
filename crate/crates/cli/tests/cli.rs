use std::path::Path;
use std::process::{Command, Output};

fn extremal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_extremal")).args(args).env_remove("EXTREMAL_SEED").output().unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

fn record(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

const SMALL_HITTING: &str = r#"{"experiment":"hitting-law","n":1000,"resolution":1000,"replicates":2000,"seed":3}"#;

#[test]
fn passing_experiment_exits_zero() {
    let out = extremal(&["mtg4-diagnostics", "--check"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rec = record(&out);
    assert_eq!(rec["schema"], 1);
    assert_eq!(rec["pass"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS roundtrip"));
}

#[test]
fn failed_check_exits_two_only_with_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"experiment":"centering-phenomenon","expect":"diverges"}"#,
    );
    let out = extremal(&["centering-phenomenon", "--config", &cfg, "--check"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
    let out = extremal(&["centering-phenomenon", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(record(&out)["pass"], false);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(extremal(&["no-such-experiment"]).status.code(), Some(1));
    assert_eq!(extremal(&[]).status.code(), Some(1));
    assert_eq!(extremal(&["hitting-law", "--config", "/nonexistent/c.json"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{"experiment":"hitting-law","nope":1}"#);
    assert_eq!(extremal(&["hitting-law", "--config", &cfg]).status.code(), Some(1));
    let cfg = write_config(dir.path(), "other.json", SMALL_HITTING);
    assert_eq!(extremal(&["range-stats", "--config", &cfg]).status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = extremal(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("--json-out"));
}

#[test]
fn resource_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "big.json",
        r#"{"experiment":"process-convergence","return_law":{"beta":0.05},"n":100000000}"#,
    );
    let out = extremal(&["process-convergence", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("series terms"));
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL_HITTING);
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_extremal"));
        cmd.args(["hitting-law", "--config", &cfg]).env_remove("EXTREMAL_SEED");
        if let Some(s) = env {
            cmd.env("EXTREMAL_SEED", s);
        }
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        record(&cmd.output().unwrap())
    };
    assert_eq!(run(None, None)["seed"], 3);
    assert_eq!(run(Some("11"), None)["seed"], 11);
    assert_eq!(run(Some("11"), Some("12"))["seed"], 12);
    let a = run(Some("11"), None);
    let b = run(None, Some("11"));
    assert_eq!(a["estimates"], b["estimates"]);
    assert_ne!(a["estimates"], run(None, None)["estimates"]);
}

#[test]
fn bad_seed_variable_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_extremal"))
        .args(["mtg4-diagnostics"])
        .env("EXTREMAL_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn csv_and_json_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL_HITTING);
    let csv = dir.path().join("out.csv");
    let json = dir.path().join("out.json");
    let out = extremal(&[
        "hitting-law",
        "--config",
        &cfg,
        "--csv-out",
        csv.to_str().unwrap(),
        "--json-out",
        json.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty(), "record goes to the file when --json-out is set");
    let rec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(rec["experiment"], "hitting-law");
    assert_eq!(rec["config"]["workers"], 2);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let width = lines.next().unwrap().split(',').count();
    assert!(width >= 2);
    assert!(lines.all(|l| l.split(',').count() == width));
}

#[test]
fn debug_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let visits = dir.path().join("visits.txt");
    let path = dir.path().join("path.csv");
    let cfg = write_config(
        dir.path(),
        "p.json",
        r#"{"experiment":"process-convergence","n":200,"replicates":20}"#,
    );
    let out = extremal(&[
        "process-convergence",
        "--config",
        &cfg,
        "--visits-out",
        visits.to_str().unwrap(),
        "--path-csv",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = std::fs::read_to_string(&visits).unwrap();
    assert!(!v.trim().is_empty());
    let p = std::fs::read_to_string(&path).unwrap();
    let mut lines = p.lines();
    assert_eq!(lines.next(), Some("time,value"));
    let rows: Vec<(u64, f64)> = lines
        .map(|l| {
            let (t, x) = l.split_once(',').unwrap();
            (t.parse().unwrap(), x.parse().unwrap())
        })
        .collect();
    // Sparse: only times with a positive value are listed.
    assert!(!rows.is_empty());
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0));
    assert!(rows.iter().all(|r| r.0 <= 200 && r.1 > 0.0));
}
