//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fracp_core::experiments::{
    run_exponent_table, run_inequalities, run_riesz_example, run_scenario, run_sharpness_example,
    ExponentTableConfig, InequalityConfig, RieszConfig, Scenario, SharpnessConfig,
};
use fracp_core::grid::{sample_closed_form, sample_exact};
use fracp_core::params::theta_homogeneous;
use fracp_core::quadrature::{
    apply_operator_grid, verify_tail_lemmas, ClosedField, KernelTable, TailLemmaConfig,
};
use fracp_core::report::Check;
use fracp_core::solver::{
    discrete_energy, energy_gradient, solve_dirichlet, DirichletProblem, Domain, Initial,
    SolveOptions,
};
use fracp_core::{theta_exponent, Expr, FarField, Grid, Integrability, Params};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn scenario(name: &str) -> Result<Scenario, String> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.json"));
    let mut s = Scenario::load(&path).map_err(|e| format!("{name}: {e}"))?;
    s.output_dir = None;
    Ok(s)
}

fn check_of<'a>(checks: &'a [Check], name: &str) -> Result<&'a Check, String> {
    checks
        .iter()
        .find(|c| c.name == name)
        .ok_or_else(|| format!("missing check {name}"))
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn inequalities() -> Outcome {
    let t = Instant::now();
    let cfg = InequalityConfig::default();
    let r = run_inequalities(&cfg, 20240601).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let violations: usize = r.rows.iter().map(|row| row.verdict.violations).sum();
    let per_id = cfg.samples;
    let counted = r.rows.iter().map(|row| row.verdict.samples).sum::<usize>() / cfg.ids.len();
    let ok = violations == 0 && counted >= per_id && elapsed < Duration::from_secs(60);
    Ok((
        ok,
        format!(
            "{} ids x {counted} tuples, {violations} violations, {:.1} s",
            cfg.ids.len(),
            secs(elapsed)
        ),
    ))
}

fn exponent_formula() -> Outcome {
    let mut ok = true;
    for dim in 1..=3 {
        let params =
            Params::new(dim, 0.5, 2.0, Integrability::Infinite).map_err(|e| e.to_string())?;
        ok &= theta_exponent(&params).map_err(|e| e.to_string())? == 1.0;
    }
    let cfg = ExponentTableConfig::default();
    let a = run_exponent_table(&cfg).map_err(|e| e.to_string())?;
    let b = run_exponent_table(&cfg).map_err(|e| e.to_string())?;
    for row in a.rows.iter().filter(|r| r.q == "inf") {
        ok &= row.theta == (row.s * row.p / (row.p - 1.0)).min(1.0);
        ok &= row.theta == theta_homogeneous(row.s, row.p);
    }
    ok &= a == b && a.checks.iter().all(|c| c.pass);
    Ok((
        ok,
        format!("{} rows, deterministic {}", a.rows.len(), a == b),
    ))
}

fn sharpness() -> Outcome {
    let t = Instant::now();
    let r = run_sharpness_example(&SharpnessConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let ok = (r.fitted_exponent + 0.4).abs() <= 0.01
        && r.constant_spread <= 0.02
        && (r.holder_exponent - 0.175).abs() <= 0.02
        && elapsed < Duration::from_secs(300);
    Ok((
        ok,
        format!(
            "exponent {:.6}, constant spread {:.2e}, Hölder {:.4}, {:.1} s",
            r.fitted_exponent,
            r.constant_spread,
            r.holder_exponent,
            secs(elapsed)
        ),
    ))
}

fn dirichlet(
    s: f64,
    p: f64,
    grid: &Grid,
    radius: f64,
    g: &str,
    f: &str,
) -> Result<DirichletProblem, String> {
    let dim = grid.dim();
    let params = Params::new(dim, s, p, Integrability::Infinite).map_err(|e| e.to_string())?;
    let g: Expr = g.parse().map_err(|e: fracp_core::Error| e.to_string())?;
    let f: Expr = f.parse().map_err(|e: fracp_core::Error| e.to_string())?;
    DirichletProblem::new(
        params,
        Domain::Ball {
            center: vec![0.0; dim],
            radius,
        },
        sample_exact(&g, grid).map_err(|e| e.to_string())?,
        sample_closed_form(&f, grid, FarField::zero()).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn solver_sanity() -> Outcome {
    let opts = SolveOptions::default();
    let err = |e: fracp_core::Error| e.to_string();

    let mut reproduction: f64 = 0.0;
    for (dim, s, p, nodes, g) in [
        (1, 0.5, 3.0, 129, "const:0.7"),
        (1, 0.6, 2.0, 129, "affine:0.3:1.2"),
        (1, 0.8, 3.0, 129, "affine:-0.5:2"),
        (2, 0.4, 2.5, 21, "const:-1.25"),
        (2, 0.8, 2.5, 21, "affine:0.1:0.5:-0.4"),
    ] {
        let grid = Grid::symmetric(dim, 1.5, nodes).map_err(err)?;
        let pb = dirichlet(s, p, &grid, 1.0, g, "const:0")?;
        let exact = sample_exact(&g.parse().map_err(err)?, &grid).map_err(err)?;
        let rep = solve_dirichlet(&pb, &opts).map_err(err)?;
        reproduction = reproduction.max(max_gap(rep.u.values(), exact.values()));
    }

    let grid = Grid::symmetric(1, 1.5, 65).map_err(err)?;
    let pb = dirichlet(0.5, 3.0, &grid, 1.0, "bump:0.5:0.4", "const:0.3")?;
    let n = pb.omega_nodes().len();
    let v: Vec<f64> = (0..n).map(|i| (0.7 * i as f64).sin()).collect();
    let grad = energy_gradient(&v, &pb).map_err(err)?;
    let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let mut gradient_gap: f64 = 0.0;
    for i in 0..n {
        let h = 1e-5;
        let mut plus = v.clone();
        plus[i] += h;
        let mut minus = v.clone();
        minus[i] -= h;
        let fd = (discrete_energy(&plus, &pb).map_err(err)?
            - discrete_energy(&minus, &pb).map_err(err)?)
            / (2.0 * h);
        gradient_gap = gradient_gap.max((fd - grad[i]).abs() / scale);
    }

    let grid = Grid::symmetric(1, 1.5, 129).map_err(err)?;
    let pb = dirichlet(0.5, 3.0, &grid, 1.0, "sine:2", "const:1")?;
    let n = pb.omega_nodes().len();
    let mut runs = Vec::new();
    let mut monotone = true;
    for start in [
        Initial::Exterior,
        Initial::Zero,
        Initial::Values {
            values: (0..n).map(|i| ((3 * i) % 7) as f64 - 3.0).collect(),
        },
    ] {
        let rep = solve_dirichlet(&pb, &opts.clone().with_initial(start)).map_err(err)?;
        monotone &= rep.converged && rep.energy_trace.windows(2).all(|w| w[1] <= w[0]);
        runs.push(rep.u);
    }
    let uniqueness = runs[1..]
        .iter()
        .map(|u| max_gap(u.values(), runs[0].values()))
        .fold(0.0, f64::max);

    // 513 unknowns: the unit ball at spacing 1/256.
    let grid = Grid::symmetric(1, 1.25, 641).map_err(err)?;
    let pb = dirichlet(0.5, 3.0, &grid, 1.0, "const:0", "const:1")?;
    let unknowns = pb.omega_nodes().len();
    let t = Instant::now();
    let big = solve_dirichlet(&pb, &opts).map_err(err)?;
    let elapsed = t.elapsed();
    monotone &= big.energy_trace.windows(2).all(|w| w[1] <= w[0]);

    let ok = reproduction <= 1e-8
        && gradient_gap <= 1e-6
        && uniqueness <= 1e-6
        && monotone
        && big.converged
        && unknowns == 513
        && elapsed < Duration::from_secs(60);
    Ok((
        ok,
        format!(
            "reproduction {reproduction:.1e}, gradient {gradient_gap:.1e}, uniqueness {uniqueness:.1e}, \
             monotone {monotone}, M={unknowns} solve {:.2} s",
            secs(elapsed)
        ),
    ))
}

fn comparison_slope() -> Outcome {
    let o = run_scenario(&scenario("study_sweep_p2")?).map_err(|e| e.to_string())?;
    let slope = o.summary["report"]["sweep"]["slope"]
        .as_f64()
        .ok_or("no sweep slope")?;
    let amplitudes = &o.summary["report"]["sweep"]["amplitudes"];
    let ok = (slope - 2.0).abs() <= 0.1 && *amplitudes == serde_json::json!([0.1, 1.0, 10.0]);
    Ok((ok, format!("slope {slope:.6} over {amplitudes}")))
}

fn tail_lemmas() -> Outcome {
    let failures = common::tail_lemma_failures(1000, 11);
    let hand = verify_tail_lemmas(
        &ClosedField::new(
            "const:1"
                .parse()
                .map_err(|e: fracp_core::Error| e.to_string())?,
            1,
        ),
        &TailLemmaConfig {
            q: 1.0,
            alpha: 1.0,
            x0: vec![0.0],
            x1: vec![0.0],
            r: 0.5,
            big_r: 1.0,
            m: None,
            slack: 1e-8,
        },
    )
    .map_err(|e| e.to_string())?;
    let b = hand.shifted_point;
    let ok = failures.is_empty() && (b.lhs - 8.0 / 3.0).abs() < 1e-8 && (b.rhs - 8.0).abs() < 1e-8;
    Ok((
        ok,
        format!(
            "1000 instances, {} violations; hand instance {:.10} vs {:.10}",
            failures.len(),
            b.lhs,
            b.rhs
        ),
    ))
}

fn riesz() -> Outcome {
    let r = run_riesz_example(&RieszConfig::default()).map_err(|e| e.to_string())?;
    let increasing = r.ladder.windows(2).all(|w| w[1].quotient > w[0].quotient);
    let distances: Vec<f64> = r.ladder.iter().map(|q| q.distance).collect();
    let ok = r.center_relative_error <= 0.005
        && r.far_relative_error <= 0.01
        && increasing
        && distances == [0.1, 0.05, 0.025, 0.0125];
    Ok((
        ok,
        format!(
            "u(0) error {:.1e}, far-field error {:.1e}, quotients {:?}",
            r.center_relative_error,
            r.far_relative_error,
            r.ladder
                .iter()
                .map(|q| (q.quotient * 100.0).round() / 100.0)
                .collect::<Vec<_>>()
        ),
    ))
}

fn performance() -> Outcome {
    let err = |e: fracp_core::Error| e.to_string();
    let bump: Expr = "bump:0.3".parse().map_err(err)?;
    let mut times = Vec::new();
    for (dim, nodes) in [(1, 4096), (2, 64)] {
        let params = Params::new(dim, 0.5, 3.0, Integrability::Infinite).map_err(err)?;
        let grid = Grid::symmetric(dim, 1.0, nodes).map_err(err)?;
        let u = sample_closed_form(&bump, &grid, FarField::zero()).map_err(err)?;
        let table = KernelTable::new(&grid, &params).map_err(err)?;
        let t = Instant::now();
        apply_operator_grid(&u, &table).map_err(err)?;
        times.push(t.elapsed());
    }
    let ok = times[0] < Duration::from_secs(2) && times[1] < Duration::from_secs(30);
    Ok((
        ok,
        format!(
            "1D M=4096 {:.3} s, 2D 64x64 {:.3} s",
            secs(times[0]),
            secs(times[1])
        ),
    ))
}

fn property_suite(earlier: bool) -> Outcome {
    let mut ok = earlier;
    let mut notes = Vec::new();
    for name in ["study_harmonic", "study_harmonic_2d"] {
        let o = run_scenario(&scenario(name)?).map_err(|e| e.to_string())?;
        let c = check_of_json(&o.summary, "ladder_stable")?;
        ok &= c.pass;
        notes.push(format!("{name} ladder stable {}", c.pass));
    }
    let o = run_scenario(&scenario("study_p3")?).map_err(|e| e.to_string())?;
    let floor = check_of_json(&o.summary, "exponent_floor")?;
    ok &= floor.pass;
    notes.push(format!(
        "study_p3 exponent {:.4} vs floor {}",
        floor.value, floor.target
    ));
    notes.push(format!(
        "criteria 1-8 {}",
        if earlier { "pass" } else { "FAIL" }
    ));
    Ok((ok, notes.join("; ")))
}

fn check_of_json(summary: &serde_json::Value, name: &str) -> Result<Check, String> {
    let checks: Vec<Check> =
        serde_json::from_value(summary["checks"].clone()).map_err(|e| e.to_string())?;
    check_of(&checks, name).cloned()
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("inequality suite", inequalities),
        ("exponent formula", exponent_formula),
        ("sharpness instance", sharpness),
        ("solver sanity", solver_sanity),
        ("comparison slope p=2", comparison_slope),
        ("tail lemmas", tail_lemmas),
        ("Riesz potential", riesz),
        ("performance", performance),
    ];
    let mut all = true;
    let report = |k: usize, name: &str, outcome: Outcome| {
        let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        println!(
            "criterion {k} {} {name}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        pass
    };
    for (k, (name, run)) in criteria.iter().enumerate() {
        all &= report(k + 1, name, run());
    }
    let ninth = report(9, "property suite", property_suite(all));
    if ninth {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
