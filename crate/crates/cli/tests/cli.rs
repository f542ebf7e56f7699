use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use arlda_cli::{load_run, read_csv, CSV_HEADER};

fn arlda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arlda")).args(args).output().expect("spawn arlda")
}

fn solve_to(path: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["solve", "--out", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    arlda(&args)
}

#[test]
fn solve_is_deterministic_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let flags =
        ["--problem", "nl-l1-regression", "--dim", "3", "--oracle", "noise", "--seed", "7", "--epsilon", "1e-3"];
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(solve_to(&a, &flags).status.code(), Some(0));
    assert_eq!(solve_to(&b, &flags).status.code(), Some(0));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let summary = |p: &Path| {
        let mut v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(p.with_extension("summary.json")).unwrap()).unwrap();
        v["config"]["out"] = serde_json::Value::Null;
        v
    };
    assert_eq!(summary(&a), summary(&b));
}

#[test]
fn trace_has_the_documented_header() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    assert_eq!(solve_to(&p, &["--problem", "lasso1d", "--epsilon", "1e-3"]).status.code(), Some(0));
    let text = fs::read_to_string(&p).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let rows = read_csv(text.as_bytes()).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.windows(2).all(|w| w[1].k == w[0].k + 1));
}

#[test]
fn rejects_epsilon_outside_unit_interval() {
    let out = arlda(&["solve", "--epsilon", "2.0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(0,1)"));
}

#[test]
fn rejects_unknown_problem_and_oracle() {
    assert_eq!(arlda(&["solve", "--problem", "nope"]).status.code(), Some(1));
    assert_eq!(arlda(&["solve", "--oracle", "nope"]).status.code(), Some(1));
    assert_eq!(arlda(&["solve", "--problem", "quad", "--oracle", "series"]).status.code(), Some(1));
}

#[test]
fn audit_of_exact_run_passes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.csv");
    assert_eq!(solve_to(&p, &["--problem", "rosenbrock-pen", "--epsilon", "1e-3"]).status.code(), Some(0));
    let findings = dir.path().join("audit.json");
    let out = arlda(&["audit", "--run", p.to_str().unwrap(), "--out", findings.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(findings).unwrap()).unwrap();
    assert_eq!(report["failures"], 0);
    assert!(report["checks"].as_u64().unwrap() > 0);
}

#[test]
fn audit_of_json_run_passes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.json");
    let out = solve_to(&p, &["--problem", "series-l1", "--oracle", "series", "--format", "json", "--epsilon", "1e-3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(arlda(&["audit", "--run", p.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn corrupted_trace_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.csv");
    assert_eq!(solve_to(&p, &["--problem", "quad", "--epsilon", "1e-3"]).status.code(), Some(0));
    let text = fs::read_to_string(&p).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines[1] = lines[1].replacen(',', ",not-a-number,", 1);
    fs::write(&p, lines.join("\n")).unwrap();
    let out = arlda(&["audit", "--run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(load_run(&p).is_err());
}

#[test]
fn audit_without_summary_fails() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.csv");
    assert_eq!(solve_to(&p, &["--problem", "quad", "--epsilon", "1e-3"]).status.code(), Some(0));
    fs::remove_file(p.with_extension("summary.json")).unwrap();
    assert_eq!(arlda(&["audit", "--run", p.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(arlda(&["audit", "--run", "/nonexistent/run.csv"]).status.code(), Some(1));
}

#[test]
fn tampered_omega_fails_the_audit() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.csv");
    assert_eq!(solve_to(&p, &["--problem", "quad", "--epsilon", "1e-3"]).status.code(), Some(0));
    // Doubling ω in the CSV breaks the ω rule; the CSV takes precedence.
    let text = fs::read_to_string(&p).unwrap();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 1 {
            let mut f: Vec<String> = line.split(',').map(str::to_string).collect();
            let w: f64 = f[2].parse().unwrap();
            f[2] = format!("{:e}", 2.0 * w);
            out.push(f.join(","));
        } else {
            out.push(line.to_string());
        }
    }
    fs::write(&p, out.join("\n") + "\n").unwrap();
    assert_eq!(arlda(&["audit", "--run", p.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn floors_above_need_stall_with_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.json");
    let out = solve_to(
        &p,
        &[
            "--problem",
            "quad",
            "--format",
            "json",
            "--epsilon",
            "1e-6",
            "--floor-f",
            "1e-4",
            "--floor-g",
            "1e-4",
            "--floor-c",
            "1e-4",
            "--floor-J",
            "1e-4",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
    assert!(v["status"].as_str().unwrap().starts_with("stalled"));
    assert!(v["report"]["noisy_optimality_bound"].is_number());
}

#[test]
fn iteration_budget_gives_exit_code_three() {
    let out = arlda(&["solve", "--problem", "rosenbrock-pen", "--epsilon", "1e-6", "--max-iters", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sweep_needs_three_epsilons_and_writes_both_tables() {
    assert_eq!(arlda(&["sweep", "--epsilon", "1e-2", "--epsilon", "1e-3"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("sweep.json");
    let out = arlda(&[
        "sweep",
        "--problem",
        "lassoNd",
        "--epsilon",
        "1e-2",
        "--epsilon",
        "1e-3",
        "--epsilon",
        "1e-4",
        "--format",
        "json",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["bounds_ok"], true);
    assert_eq!(fs::read_to_string(p.with_extension("csv")).unwrap().lines().count(), 4);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"problem": "sum-l1", "oracle": "partial-sum", "epsilon": [0.5]}"#).unwrap();
    let p = dir.path().join("run.json");
    let out = arlda(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--epsilon",
        "1e-3",
        "--format",
        "json",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(v["epsilon"], 1e-3);
    assert_eq!(v["config"]["problem"], "sum-l1");

    fs::write(&cfg, r#"{"problem": "quad", "bogus": 1}"#).unwrap();
    assert_eq!(arlda(&["solve", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}
