use serde::{Deserialize, Serialize};

use super::descent::{solve_dirichlet, SolveOptions, SolveReport};
use super::problem::{DirichletProblem, Domain};
use crate::error::{invalid, Error, Result};
use crate::grid::{FarFieldModel, GridFunction};
use crate::params::{Integrability, Params};
use crate::quadrature::{tail, Extension, KernelTable, TailRule};
use crate::seminorms::{ball_lq_norm, ball_mean_power, fit::loglog_fit};

/// Solves `(-Δ_p)^s v = 0` in the ball with `v = u` outside it.
pub fn harmonic_replacement(
    u: &GridFunction,
    center: &[f64],
    radius: f64,
    params: &Params,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let zero = GridFunction::constant(u.grid().clone(), 0.0);
    let problem = DirichletProblem::new(
        *params,
        Domain::Ball {
            center: center.to_vec(),
            radius,
        },
        u.clone(),
        zero,
    )?;
    let report = solve_dirichlet(&problem, opts)?;
    if !report.converged {
        return Err(Error::NotConverged(format!(
            "harmonic replacement stopped at residual {:e} after {} iterations",
            report.residual_sup, report.iterations
        )));
    }
    Ok(report)
}

/// `[w]^p_{W^{s,p}(R^N)}` for a grid function with zero far field, on the grid lattice.
pub fn fractional_energy(w: &GridFunction, params: &Params) -> Result<f64> {
    if !matches!(w.far_field().model, FarFieldModel::Zero) {
        return Err(invalid("fractional energy over R^N needs a zero far field"));
    }
    let grid = w.grid();
    let table = KernelTable::new(grid, params)?;
    let rule = TailRule::new(&table, 0.0)?;
    let ext = Extension::new(w, table.reach())?;
    let p = params.p;
    let mass = rule.mass();
    let offsets = table.offsets();
    let mut inside = 0.0;
    let mut cross = 0.0;
    for flat in 0..grid.len() {
        let idx = grid.multi_index(flat);
        let wi = w.values()[flat];
        for (k, weight) in &offsets {
            let j = [idx[0] + k[0], idx[1] + k[1]];
            let wj = ext.values[ext.at(idx, *k)];
            let term = (wi - wj).abs().powf(p) * weight;
            if grid.flat_index(j).is_some() {
                inside += term;
            } else {
                cross += term;
            }
        }
        cross += wi.abs().powf(p) * mass;
    }
    Ok(grid.cell_volume() * (inside + 2.0 * cross))
}

/// Both sides of the comparison estimates between `u` and its harmonic replacement `v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `[u - v]^p_{W^{s,p}(R^N)}`.
    pub seminorm: f64,
    /// `⨍_B |u - v|^p`.
    pub mean_p: f64,
    /// `‖f‖_{L^q(B)}`.
    pub source_norm: f64,
    /// `|B|^{p'/q' - (p/(p-1))(N-sp)/(Np)} ‖f‖_q^{p'}`.
    pub seminorm_bound: f64,
    /// The same with the extra factor `|B|^{sp/N - 1}`.
    pub mean_bound: f64,
    pub seminorm_ratio: f64,
    pub mean_ratio: f64,
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Compares `u` with its harmonic replacement `v` on the ball against the source size.
pub fn comparison_diagnostic(
    u: &GridFunction,
    v: &GridFunction,
    f: &GridFunction,
    center: &[f64],
    radius: f64,
    params: &Params,
) -> Result<ComparisonReport> {
    if u.grid() != v.grid() || u.grid() != f.grid() {
        return Err(invalid("u, v and f must share a grid"));
    }
    let diff: Vec<f64> = u
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| a - b)
        .collect();
    let w = GridFunction::new(u.grid().clone(), diff, crate::grid::FarField::zero())?;
    let seminorm = fractional_energy(&w, params)?;
    let mean_p = ball_mean_power(&w, center, radius, params.p)?;
    let source_norm = ball_lq_norm(f, center, radius, params.q)?;
    let (n, s, p) = (params.dim as f64, params.s, params.p);
    let measure = Domain::Ball {
        center: center.to_vec(),
        radius,
    }
    .measure();
    let p_conj = p / (p - 1.0);
    let inv_q_conj = match params.q {
        Integrability::Infinite => 1.0,
        Integrability::Finite(q) => 1.0 - 1.0 / q,
    };
    let expo = p_conj * inv_q_conj - p / (p - 1.0) * (n - s * p) / (n * p);
    let seminorm_bound = measure.powf(expo) * source_norm.powf(p_conj);
    let mean_bound = seminorm_bound * measure.powf(s * p / n - 1.0);
    Ok(ComparisonReport {
        seminorm,
        mean_p,
        source_norm,
        seminorm_bound,
        mean_bound,
        seminorm_ratio: ratio(seminorm, seminorm_bound),
        mean_ratio: ratio(mean_p, mean_bound),
    })
}

/// Comparison estimates across a sweep `f → λ f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSweep {
    pub amplitudes: Vec<f64>,
    pub reports: Vec<ComparisonReport>,
    /// Log-log slope of the seminorm against `‖f‖_q`; `p' = p/(p-1)` is expected.
    pub slope: f64,
    pub max_ratio: f64,
}

/// Solves the problem for each scaled source, replaces on the ball and compares.
pub fn comparison_sweep(
    problem: &DirichletProblem,
    center: &[f64],
    radius: f64,
    amplitudes: &[f64],
    opts: &SolveOptions,
) -> Result<ComparisonSweep> {
    if amplitudes.len() < 2 {
        return Err(invalid("a sweep needs at least two amplitudes"));
    }
    let mut reports = Vec::new();
    for &lambda in amplitudes {
        let mut scaled = problem.clone();
        scaled.source = problem.source.map(|x| lambda * x);
        let solved = solve_dirichlet(&scaled, opts).map_err(|e| e.in_stage("solve"))?;
        if !solved.converged {
            return Err(
                Error::NotConverged(format!("solve at amplitude {lambda}")).in_stage("solve")
            );
        }
        let v = harmonic_replacement(&solved.u, center, radius, &problem.params, opts)
            .map_err(|e| e.in_stage("harmonic_replacement"))?;
        reports.push(comparison_diagnostic(
            &solved.u,
            &v.u,
            &scaled.source,
            center,
            radius,
            &problem.params,
        )?);
    }
    let xs: Vec<f64> = reports.iter().map(|r| r.source_norm).collect();
    let ys: Vec<f64> = reports.iter().map(|r| r.seminorm).collect();
    let slope = loglog_fit(&xs, &ys)?.slope;
    let max_ratio = reports.iter().map(|r| r.seminorm_ratio).fold(0.0, f64::max);
    Ok(ComparisonSweep {
        amplitudes: amplitudes.to_vec(),
        reports,
        slope,
        max_ratio,
    })
}

/// Local sup bound against mean, tail and source terms on `B_R(x0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalBoundReport {
    /// `sup_{B_{σR}} |u|`.
    pub sup: f64,
    /// `(⨍_{B_R} |u|^p)^{1/p}`.
    pub mean_term: f64,
    /// `Tail_{p-1,sp}(u; x0, σR)`.
    pub tail_term: f64,
    /// `(R^{sp - N/q} ‖f‖_{L^q(B_R)})^{1/(p-1)}`.
    pub source_term: f64,
    pub bracket: f64,
    pub ratio: f64,
}

/// `(R^{sp - N/q} ‖f‖_q)^{1/(p-1)}`.
pub fn source_term(radius: f64, source_norm: f64, params: &Params) -> f64 {
    let e = params.sp() - params.q.dim_ratio(params.dim);
    (radius.powf(e) * source_norm).powf(1.0 / (params.p - 1.0))
}

pub fn local_bound_diagnostic(
    u: &GridFunction,
    f: &GridFunction,
    center: &[f64],
    radius: f64,
    sigma: f64,
    params: &Params,
) -> Result<LocalBoundReport> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(invalid("sigma must lie in (0,1)"));
    }
    let sup = ball_lq_norm(u, center, sigma * radius, Integrability::Infinite)?;
    let mean_term = ball_mean_power(u, center, radius, params.p)?.powf(1.0 / params.p);
    let tail_term = tail(u, center, sigma * radius, params.p - 1.0, params.sp())?;
    let source_term = source_term(radius, ball_lq_norm(f, center, radius, params.q)?, params);
    let bracket = mean_term + tail_term + source_term;
    Ok(LocalBoundReport {
        sup,
        mean_term,
        tail_term,
        source_term,
        bracket,
        ratio: ratio(sup, bracket),
    })
}
