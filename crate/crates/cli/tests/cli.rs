use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fracp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracp"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.json"))
}

#[test]
fn theta_reports_the_capped_exponent() {
    let out = fracp(&["theta", "--N", "2", "--s", "0.5", "--p", "2", "--q", "inf"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["theta"], 1.0);
    assert_eq!(v["regime"], "capped_boundary");
}

#[test]
fn invalid_parameters_exit_with_two() {
    let out = fracp(&["theta", "--N", "2", "--s", "2", "--p", "2", "--q", "inf"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("s must lie in (0,1)"));
}

#[test]
fn inequality_commands() {
    let list = fracp(&["ineq", "list"]);
    assert!(String::from_utf8_lossy(&list.stdout).contains("mixed-product"));
    let check = fracp(&[
        "ineq", "check", "monotone", "--p", "3", "--second", "2", "1", "-2",
    ]);
    assert!(
        check.status.success(),
        "{}",
        String::from_utf8_lossy(&check.stderr)
    );
    assert_eq!(stdout_json(&check)["pass"], true);
    let sweep = fracp(&[
        "ineq",
        "sweep",
        "holder",
        "--p",
        "2",
        "--second",
        "2",
        "--samples",
        "2000",
        "--constant",
        "2.02",
    ]);
    assert!(sweep.status.success());
    assert_eq!(stdout_json(&sweep)["violations"], 0);
}

#[test]
fn run_writes_artifacts_to_the_override_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracp(&[
        "run",
        scenario("theta_table").to_str().unwrap(),
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("theta_table.json")).unwrap())
            .unwrap();
    assert_eq!(summary["passed"], true);
    assert!(has_csv(dir.path()));
}

fn has_csv(dir: &Path) -> bool {
    std::fs::read_dir(dir)
        .unwrap()
        .any(|e| e.unwrap().path().extension().is_some_and(|x| x == "csv"))
}

#[test]
fn solve_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("problem.json");
    std::fs::write(
        &problem,
        r#"{"params": {"N": 1, "s": 0.5, "p": 2.5, "q": "inf"},
            "grid": {"half_width": 1.5, "nodes": 129},
            "domain": {"kind": "ball", "center": [0.0], "radius": 1.0},
            "exterior": "const:0", "source": "const:1"}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = fracp(&[
        "solve",
        problem.to_str().unwrap(),
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = out_dir.join("solution.csv");
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("solve.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], true);
    let out = fracp(&[
        "analyze",
        csv.to_str().unwrap(),
        "--fit-exponent",
        "--center",
        "0.3",
        "--p",
        "2.5",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let exponent = stdout_json(&out)["exponent"].clone();
    assert!(!exponent.is_null(), "{exponent}");
    let bare = fracp(&["analyze", csv.to_str().unwrap()]);
    assert_eq!(bare.status.code(), Some(2));
}

#[test]
fn missing_scenario_is_an_error() {
    let out = fracp(&["run", "/nonexistent/scenario.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flag_form_sweep_replays_and_extends_the_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("witnesses.jsonl");
    let args = [
        "ineq",
        "--id",
        "mixed-product",
        "--p",
        "3",
        "--gamma",
        "2",
        "--n",
        "20000",
        "--seed",
        "42",
        "--corpus",
    ];
    for round in 1..=2 {
        let mut a = args.to_vec();
        a.push(corpus.to_str().unwrap());
        let out = fracp(&a);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let v = stdout_json(&out);
        assert_eq!(v["violations"], 0);
        assert_eq!(v["corpus_failures"], serde_json::json!([]));
        assert_eq!(
            std::fs::read_to_string(&corpus).unwrap().lines().count(),
            round
        );
    }
    assert_eq!(fracp(&["ineq"]).status.code(), Some(2));
}
