use std::path::PathBuf;

use fracp_core::experiments::{
    run_exponent_table, run_riesz_example, run_scenario, run_sharpness_example,
    sharpness_preconditions, ExponentTableConfig, RieszConfig, Scenario, SharpnessConfig, Task,
};
use fracp_core::{Error, Integrability, Params};

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

#[test]
fn shipped_scenarios_parse() {
    let mut count = 0;
    for entry in std::fs::read_dir(scenario_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let s = Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(path.file_stem().unwrap().to_str().unwrap(), s.name);
            count += 1;
        }
    }
    assert!(count >= 8);
}

#[test]
fn malformed_scenarios_are_rejected() {
    assert!(Scenario::from_json(r#"{"name": "x", "kind": "nope"}"#).is_err());
    assert!(Scenario::from_json(r#"{"name": "bad name", "kind": "exponent_table"}"#).is_err());
    let s = Scenario::from_json(r#"{"name": "t", "kind": "exponent_table", "s": [0.5]}"#).unwrap();
    assert!(matches!(s.task, Task::ExponentTable(ref c) if c.s == vec![0.5]));
    assert!(
        Scenario::from_json(r#"{"name": "r", "kind": "riesz", "distances": [0.1, 0.03]}"#).is_err()
    );
}

#[test]
fn sharpness_hypotheses_are_named() {
    let params = Params::new(2, 0.25, 3.0, Integrability::Finite(4.0)).unwrap();
    assert!(sharpness_preconditions(&params, 0.05).is_ok());
    // eps must stay below N/(q(p - 1)) = 0.25.
    match sharpness_preconditions(&params, 0.25) {
        Err(Error::Hypothesis(msg)) => assert!(msg.contains("eps < N/(q(p - 1))"), "{msg}"),
        other => panic!("{other:?}"),
    }
    let one_dim = Params::new(1, 0.25, 3.0, Integrability::Finite(4.0)).unwrap();
    assert!(
        matches!(sharpness_preconditions(&one_dim, 0.05), Err(Error::Hypothesis(m)) if m.contains("N >= 2"))
    );
    let infinite = Params::new(2, 0.25, 3.0, Integrability::Infinite).unwrap();
    assert!(
        matches!(sharpness_preconditions(&infinite, 0.05), Err(Error::Hypothesis(m)) if m.contains("q < inf"))
    );
}

#[test]
fn exponent_table_reference_rows() {
    let cfg = ExponentTableConfig {
        dims: vec![2],
        s: vec![0.25, 0.5],
        p: vec![2.0, 3.0],
        q: vec![Integrability::Finite(8.0), Integrability::Infinite],
    };
    let t = run_exponent_table(&cfg).unwrap();
    let row = |s: f64, p: f64, q: &str| {
        t.rows
            .iter()
            .find(|r| r.s == s && r.p == p && r.q == q)
            .unwrap()
    };
    let a = row(0.5, 2.0, "inf");
    assert_eq!((a.theta, a.regime.as_str()), (1.0, "capped_boundary"));
    let b = row(0.25, 3.0, "8");
    assert!((b.theta - 0.25).abs() < 1e-15);
    assert_eq!(b.regime, "almost_sharp");
    let single = ExponentTableConfig {
        dims: vec![2],
        s: vec![0.25],
        p: vec![3.0],
        q: vec![Integrability::Finite(4.0)],
    };
    let c = &run_exponent_table(&single).unwrap().rows[0];
    assert!((c.theta - 0.125).abs() < 1e-15);
    assert!(t.checks.iter().all(|c| c.pass));
    // sp <= N/q on a row.
    let bad = ExponentTableConfig {
        q: vec![Integrability::Finite(1.5)],
        ..cfg
    };
    assert!(run_exponent_table(&bad).is_err());
}

#[test]
fn second_sharpness_instance() {
    let cfg = SharpnessConfig {
        params: Params::new(2, 0.3, 2.5, Integrability::Finite(5.0)).unwrap(),
        eps: 0.1,
        ..SharpnessConfig::default()
    };
    let r = run_sharpness_example(&cfg).unwrap();
    assert!(r.passed(), "{:?}", r.checks);
    // γ(p - 1) - sp with Θ = (0.75 - 0.4)/1.5.
    let theta = 0.35 / 1.5;
    assert!((r.expected_exponent - ((theta + 0.1) * 1.5 - 0.75)).abs() < 1e-12);
}

#[test]
fn riesz_defaults_pass() {
    let r = run_riesz_example(&RieszConfig::default()).unwrap();
    assert!(r.passed(), "{:?}", r.checks);
    assert!(r.ladder.windows(2).all(|w| w[1].quotient > w[0].quotient));
}

#[test]
fn artifacts_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let text = |d: &std::path::Path| {
        format!(
            r#"{{"name": "tiny", "kind": "inequalities", "seed": 3, "samples": 6000,
                "ids": ["monotone", "holder"], "p": [2.0, 3.0], "second": [2.0],
                "output_dir": {:?}}}"#,
            d.to_str().unwrap()
        )
    };
    let mut csvs = Vec::new();
    for sub in ["a", "b"] {
        let d = dir.path().join(sub);
        let s = Scenario::from_json(&text(&d)).unwrap();
        let o = run_scenario(&s).unwrap();
        assert!(o.passed);
        assert_eq!(o.files.len(), 2);
        csvs.push(std::fs::read(d.join("tiny_verdicts.csv")).unwrap());
        let json: serde_json::Value =
            serde_json::from_slice(&std::fs::read(d.join("tiny.json")).unwrap()).unwrap();
        assert_eq!(json["passed"], true);
        assert!(json["version"].as_str().is_some_and(|v| !v.is_empty()));
    }
    assert_eq!(csvs[0], csvs[1]);
}
