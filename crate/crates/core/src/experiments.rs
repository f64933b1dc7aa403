//! Scenario runner: the sharpness profile, the Riesz potential of the unit ball, exponent
//! tables, end-to-end solver studies and randomized inequality sweeps.
//!
//! A [`Scenario`] is a JSON document tagged by `kind`. [`run_scenario`] executes it, embeds
//! the resolved configuration and the tool version in the summary and writes CSV artifacts.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::expr::Expr;
use crate::grid::{sample_closed_form, sample_exact, FarField, Grid};
use crate::inequalities::{
    brute_force_constant, sweep, Budget, ConstantEstimate, Exponents, InequalityId, Verdict,
};
use crate::params::{regime, theta_exponent, theta_homogeneous, Integrability, Params};
use crate::quad::{adaptive_breaks, Integral, Tolerance};
use crate::quadrature::{apply_operator_point, QuadControls};
use crate::report::{all_pass, write_csv, write_grid_csv, write_json, Check, Envelope};
use crate::seminorms::fit::loglog_fit;
use crate::seminorms::{
    dyadic_shifts, fit_holder_exponent, holder_seminorm, ladder_report, theta_ladder, LadderReport,
    RegularityReport, Window,
};
use crate::solver::{
    comparison_diagnostic, comparison_sweep, harmonic_replacement, solve_dirichlet,
    ComparisonReport, ComparisonSweep, DirichletProblem, Domain, SolveOptions,
};

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

fn require_dyadic(name: &str, radii: &[f64]) -> Result<()> {
    let mut sorted = radii.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    for r in &sorted {
        require_positive(name, *r)?;
    }
    if sorted.windows(2).any(|w| (w[0] / w[1] - 2.0).abs() > 1e-9) {
        return Err(invalid(format!("{name} must be a dyadic ladder")));
    }
    Ok(())
}

/// Checks the hypotheses of the sharpness profile and names the first one that fails.
pub fn sharpness_preconditions(params: &Params, eps: f64) -> Result<()> {
    params.validate()?;
    let n = params.dim as f64;
    let (s, p) = (params.s, params.p);
    let fail = |what: &str| {
        Err(Error::Hypothesis(format!(
            "{what} fails for {params:?}, eps = {eps}"
        )))
    };
    if params.dim < 2 {
        return fail("N >= 2");
    }
    if !(p > 2.0 && p <= n + 1.0) {
        return fail("2 < p <= N + 1");
    }
    if s > (p - 1.0) / p {
        return fail("s <= (p - 1)/p");
    }
    let q = match params.q {
        Integrability::Finite(q) => q,
        Integrability::Infinite => return fail("q < inf"),
    };
    if q <= n / (s * p) {
        return fail("N/(sp) < q");
    }
    if !(eps > 0.0 && eps < n / (q * (p - 1.0))) {
        return fail("0 < eps < N/(q(p - 1))");
    }
    Ok(())
}

/// Inputs of [`run_sharpness_example`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SharpnessConfig {
    pub params: Params,
    pub eps: f64,
    /// Radii where the operator is evaluated, on the axis and on the diagonal.
    pub radii: Vec<f64>,
    /// Dyadic radii of the oscillation fit.
    pub fit_radii: Vec<f64>,
    /// Nodes per axis of the grid on `[-1, 1]^N` used by the fit.
    pub grid_nodes: usize,
    /// Grid sizes of the Hölder blow-up check, coarse to fine.
    pub refinements: Vec<usize>,
    /// Amount by which the blow-up exponent exceeds `Θ + ε`.
    pub blowup_margin: f64,
    pub controls: QuadControls,
    pub exponent_tol: f64,
    pub constant_spread_tol: f64,
    pub holder_tol: f64,
}

impl Default for SharpnessConfig {
    fn default() -> Self {
        SharpnessConfig {
            params: Params {
                dim: 2,
                s: 0.25,
                p: 3.0,
                q: Integrability::Finite(4.0),
            },
            eps: 0.05,
            radii: vec![0.125, 0.25, 0.5, 1.0, 2.0],
            fit_radii: vec![0.5, 0.25, 0.125, 0.0625, 0.03125],
            grid_nodes: 257,
            refinements: vec![65, 129, 257],
            blowup_margin: 0.1,
            controls: QuadControls::default(),
            exponent_tol: 0.01,
            constant_spread_tol: 0.02,
            holder_tol: 0.02,
        }
    }
}

impl SharpnessConfig {
    pub fn validate(&self) -> Result<()> {
        sharpness_preconditions(&self.params, self.eps)?;
        if self.radii.len() < 2 {
            return Err(invalid("at least two operator radii are required"));
        }
        for r in &self.radii {
            require_positive("operator radius", *r)?;
        }
        require_dyadic("fit radii", &self.fit_radii)?;
        if self.refinements.len() < 2 || self.refinements.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid(
                "refinements must be at least two increasing grid sizes",
            ));
        }
        for (n, v) in [
            ("blowup margin", self.blowup_margin),
            ("exponent tolerance", self.exponent_tol),
            ("constant spread tolerance", self.constant_spread_tol),
            ("holder tolerance", self.holder_tol),
            ("quadrature tolerance", self.controls.tol),
        ] {
            require_positive(n, v)?;
        }
        Ok(())
    }
}

/// Operator value of the sharpness profile at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSample {
    pub radius: f64,
    pub angle: f64,
    pub value: f64,
    pub error: f64,
    pub flagged: bool,
    /// `value / radius^expected_exponent`.
    pub constant: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupRow {
    pub nodes: usize,
    pub spacing: f64,
    pub seminorm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub theta: f64,
    /// `Θ + ε`.
    pub profile_exponent: f64,
    /// `(Θ + ε - s)(p - 1) - s`.
    pub expected_exponent: f64,
    pub fitted_exponent: f64,
    pub samples: Vec<OperatorSample>,
    pub constant_mean: f64,
    /// `(max - min)/|mean|` of the constants over all samples.
    pub constant_spread: f64,
    /// `q · expected_exponent + N`; positive means the right-hand side is locally in `L^q`.
    pub integrability_margin: f64,
    pub regularity: RegularityReport,
    pub holder_exponent: f64,
    pub blowup_exponent: f64,
    pub blowup: Vec<BlowupRow>,
    pub checks: Vec<Check>,
}

impl SharpnessReport {
    pub fn passed(&self) -> bool {
        all_pass(&self.checks)
    }
}

/// Validates the sharpness profile `|x|^{Θ+ε}` numerically.
pub fn run_sharpness_example(cfg: &SharpnessConfig) -> Result<SharpnessReport> {
    cfg.validate()?;
    let params = cfg.params;
    let (n, s, p) = (params.dim, params.s, params.p);
    let q = params.q.as_f64();
    let theta = theta_exponent(&params)?;
    let expr = Expr::sharpness(n, s, p, q, cfg.eps)?;
    let gamma = theta + cfg.eps;
    let expected = (gamma - s) * (p - 1.0) - s;

    let points: Vec<(f64, f64)> = [0.0, 0.25 * PI]
        .iter()
        .flat_map(|&a| cfg.radii.iter().map(move |&r| (r, a)))
        .collect();
    let samples: Vec<OperatorSample> = points
        .par_iter()
        .map(|&(r, a)| {
            let mut x = vec![0.0; n];
            x[0] = r * a.cos();
            x[1] = r * a.sin();
            let v = apply_operator_point(&expr, &x, &params, &cfg.controls)?;
            Ok(OperatorSample {
                radius: r,
                angle: a,
                value: v.value,
                error: v.error,
                flagged: v.flagged,
                constant: v.value / r.powf(expected),
            })
        })
        .collect::<Result<_>>()
        .map_err(|e: Error| e.in_stage("operator"))?;
    let axis: Vec<&OperatorSample> = samples.iter().filter(|x| x.angle == 0.0).collect();
    let xs: Vec<f64> = axis.iter().map(|x| x.radius).collect();
    let ys: Vec<f64> = axis.iter().map(|x| x.value.abs()).collect();
    let fitted = loglog_fit(&xs, &ys)?.slope;
    let consts: Vec<f64> = samples.iter().map(|x| x.constant).collect();
    let mean = consts.iter().sum::<f64>() / consts.len() as f64;
    let (lo, hi) = consts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), c| {
            (a.min(*c), b.max(*c))
        });
    let spread = (hi - lo) / mean.abs();
    let margin = q * expected + n as f64;

    let grid = Grid::symmetric(n, 1.0, cfg.grid_nodes)?;
    let u = sample_exact(&expr, &grid)?;
    let center = vec![0.0; n];
    let regularity =
        fit_holder_exponent(&u, &center, &cfg.fit_radii, p).map_err(|e| e.in_stage("fit"))?;
    let holder = regularity.exponent.exponent().unwrap_or(f64::NAN);

    let blowup_exponent = (gamma + cfg.blowup_margin).min(1.0);
    let mut blowup = Vec::new();
    for &nodes in &cfg.refinements {
        let g = Grid::symmetric(n, 1.0, nodes)?;
        let v = sample_exact(&expr, &g)?;
        let window = Window::ball(center.clone(), 0.25);
        blowup.push(BlowupRow {
            nodes,
            spacing: g.spacing(0),
            seminorm: holder_seminorm(&v, blowup_exponent, &window)
                .map_err(|e| e.in_stage("blowup"))?,
        });
    }
    let grows = blowup.windows(2).all(|w| w[1].seminorm > w[0].seminorm);

    let checks = vec![
        Check::within(
            "operator_homogeneity_exponent",
            fitted,
            expected,
            cfg.exponent_tol,
        ),
        Check::at_most("operator_constant_spread", spread, cfg.constant_spread_tol),
        Check::holds(
            "operator_samples_resolved",
            samples.iter().all(|x| !x.flagged),
        ),
        Check::above("source_integrability_margin", margin, 0.0),
        Check::within("holder_exponent", holder, gamma, cfg.holder_tol),
        Check::holds("holder_seminorm_blows_up", grows),
    ];
    Ok(SharpnessReport {
        theta,
        profile_exponent: gamma,
        expected_exponent: expected,
        fitted_exponent: fitted,
        samples,
        constant_mean: mean,
        constant_spread: spread,
        integrability_margin: margin,
        regularity,
        holder_exponent: holder,
        blowup_exponent,
        blowup,
        checks,
    })
}

/// Inputs of [`run_riesz_example`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RieszConfig {
    /// Probe radii `|x|`.
    pub probes: Vec<f64>,
    /// Distances from the unit sphere of the difference-quotient ladder.
    pub distances: Vec<f64>,
    /// Radius of the far-field check.
    pub far_radius: f64,
    pub tol: f64,
    pub center_tol: f64,
    pub far_tol: f64,
}

impl Default for RieszConfig {
    fn default() -> Self {
        RieszConfig {
            probes: vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 5.0],
            distances: vec![0.1, 0.05, 0.025, 0.0125],
            far_radius: 10.0,
            tol: 1e-11,
            center_tol: 0.005,
            far_tol: 0.01,
        }
    }
}

impl RieszConfig {
    pub fn validate(&self) -> Result<()> {
        require_dyadic("boundary distances", &self.distances)?;
        if self.distances.len() < 2 || self.distances.iter().any(|d| *d >= 0.5) {
            return Err(invalid(
                "the distance ladder needs at least two entries below 1/2",
            ));
        }
        if self.probes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(invalid("probe radii must be finite and non-negative"));
        }
        for (n, v) in [
            ("far radius", self.far_radius - 1.0),
            ("quadrature tolerance", self.tol),
            ("center tolerance", self.center_tol),
            ("far tolerance", self.far_tol),
        ] {
            require_positive(n, v)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszProbe {
    pub radius: f64,
    pub value: f64,
    pub error: f64,
    /// Set when the error estimate misses the requested tolerance.
    pub flagged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientRow {
    pub distance: f64,
    /// Largest `|u(x) - u(x')| / |x - x'|` over radial pairs at this distance from the sphere.
    pub quotient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszReport {
    pub probes: Vec<RieszProbe>,
    pub center_value: f64,
    pub center_relative_error: f64,
    /// `u(x) |x|^2` at the far radius.
    pub far_scaled: f64,
    pub far_relative_error: f64,
    pub ladder: Vec<QuotientRow>,
    pub checks: Vec<Check>,
}

impl RieszReport {
    pub fn passed(&self) -> bool {
        all_pass(&self.checks)
    }
}

/// Dyadic breakpoints from `a` accumulating at `b`, down to gaps of `width`.
fn graded_towards_end(a: f64, b: f64, width: f64) -> Vec<f64> {
    let mut out = vec![a];
    let mut gap = 0.5 * (b - a);
    while gap.abs() > width && out.len() < 200 {
        out.push(b - gap);
        gap *= 0.5;
    }
    out.push(b);
    out
}

/// `∫_{|y|<1} |x - y|^{-2} dy` in `R^3` at `|x| = a`, by nested adaptive quadrature.
///
/// In polar coordinates about the origin with axis through `x` this is
/// `2π ∫_0^1 r² ∫_{-1}^{1} (a² + r² - 2art)^{-1} dt dr`.
pub fn riesz_potential(a: f64, tol: f64) -> Result<Integral> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(invalid(format!(
            "probe radius must be finite and non-negative, got {a}"
        )));
    }
    let inner_tol = Tolerance::new(1e-300, 0.1 * tol).with_max_intervals(400);
    // Inner variable w = 1 - t, so the denominator is (a - r)^2 + 2arw without cancellation.
    let inner = |r: f64| -> Integral {
        let gap = (a - r).powi(2);
        let width = if a * r > 0.0 {
            gap / (2.0 * a * r)
        } else {
            2.0
        };
        let mut breaks = graded_towards_end(2.0, 0.0, 0.25 * width);
        breaks.reverse();
        adaptive_breaks(|w| r * r / (gap + 2.0 * a * r * w), &breaks, inner_tol)
    };
    let breaks = if a > 0.0 && a < 1.0 {
        let mut b = graded_towards_end(0.0, a, 1e-6 * a);
        let upper = graded_towards_end(1.0, a, 1e-6 * a);
        b.extend(upper.iter().rev().skip(1));
        b
    } else if a == 1.0 {
        graded_towards_end(0.0, 1.0, 1e-6)
    } else if a > 1.0 {
        graded_towards_end(0.0, 1.0, 1e-3 * (a - 1.0))
    } else {
        vec![0.0, 1.0]
    };
    let outer = adaptive_breaks(
        |r| inner(r).value,
        &breaks,
        Tolerance::new(1e-300, tol).with_max_intervals(400),
    );
    // The inner errors, integrated over r on a coarse tolerance.
    let inner_err = adaptive_breaks(
        |r| inner(r).error,
        &breaks,
        Tolerance::new(1e-300, 0.1).with_max_intervals(100),
    );
    let value = 2.0 * PI * outer.value;
    if !value.is_finite() {
        return Err(Error::Unresolved(format!(
            "non-finite potential at |x| = {a}"
        )));
    }
    Ok(Integral {
        value,
        error: 2.0 * PI * (outer.error + inner_err.value.abs() + inner_err.error),
        evals: outer.evals + inner_err.evals,
    })
}

/// Evaluates the Riesz potential of the unit ball in `R^3` and its boundary behaviour.
pub fn run_riesz_example(cfg: &RieszConfig) -> Result<RieszReport> {
    cfg.validate()?;
    let mut radii: Vec<f64> = cfg.probes.clone();
    radii.extend([0.0, cfg.far_radius]);
    for d in &cfg.distances {
        radii.extend([1.0 - d, 1.0, 1.0 + d]);
    }
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let values: Vec<Integral> = radii
        .par_iter()
        .map(|&a| riesz_potential(a, cfg.tol))
        .collect::<Result<_>>()?;
    let at = |a: f64| -> f64 {
        let i = radii
            .iter()
            .position(|r| *r == a)
            .expect("probe radius was evaluated");
        values[i].value
    };
    let probes: Vec<RieszProbe> = cfg
        .probes
        .iter()
        .map(|&a| {
            let i = radii
                .iter()
                .position(|r| *r == a)
                .expect("probe radius was evaluated");
            RieszProbe {
                radius: a,
                value: values[i].value,
                error: values[i].error,
                flagged: values[i].error > 1e3 * cfg.tol * values[i].value.abs().max(1.0),
            }
        })
        .collect();
    let center_value = at(0.0);
    let center_err = (center_value / (4.0 * PI) - 1.0).abs();
    let far_scaled = at(cfg.far_radius) * cfg.far_radius.powi(2);
    let far_err = (far_scaled / (4.0 * PI / 3.0) - 1.0).abs();
    let mut sorted = cfg.distances.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let ladder: Vec<QuotientRow> = sorted
        .iter()
        .map(|&d| {
            let pairs = [(1.0 - d, 1.0 + d), (1.0 - d, 1.0), (1.0, 1.0 + d)];
            let quotient = pairs
                .iter()
                .map(|&(x, y)| (at(x) - at(y)).abs() / (y - x))
                .fold(0.0, f64::max);
            QuotientRow {
                distance: d,
                quotient,
            }
        })
        .collect();
    let increasing = ladder.windows(2).all(|w| w[1].quotient > w[0].quotient);
    let checks = vec![
        Check::at_most("center_relative_error", center_err, cfg.center_tol),
        Check::at_most("far_field_relative_error", far_err, cfg.far_tol),
        Check::holds("difference_quotients_increase", increasing),
        Check::holds("probes_resolved", probes.iter().all(|p| !p.flagged)),
    ];
    Ok(RieszReport {
        probes,
        center_value,
        center_relative_error: center_err,
        far_scaled,
        far_relative_error: far_err,
        ladder,
        checks,
    })
}

/// Parameter sweep of [`run_exponent_table`]; rows are the Cartesian product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExponentTableConfig {
    pub dims: Vec<usize>,
    pub s: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<Integrability>,
}

impl Default for ExponentTableConfig {
    fn default() -> Self {
        ExponentTableConfig {
            dims: vec![1, 2, 3],
            s: vec![0.25, 0.5, 0.75],
            p: vec![2.0, 2.5, 3.0, 4.0],
            q: vec![
                Integrability::Finite(8.0),
                Integrability::Finite(16.0),
                Integrability::Finite(64.0),
                Integrability::Infinite,
            ],
        }
    }
}

/// One line of the exponent table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentRow {
    #[serde(rename = "N")]
    pub dim: usize,
    pub s: f64,
    pub p: f64,
    pub q: String,
    pub theta: f64,
    pub theta_homogeneous: f64,
    pub regime: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    pub rows: Vec<ExponentRow>,
    pub checks: Vec<Check>,
}

fn q_label(q: Integrability) -> String {
    match q {
        Integrability::Infinite => "inf".into(),
        Integrability::Finite(v) => v.to_string(),
    }
}

/// Tabulates `Θ(N,s,p,q)`, the homogeneous exponent and the regime over a sweep.
pub fn run_exponent_table(cfg: &ExponentTableConfig) -> Result<ExponentTable> {
    if cfg.dims.is_empty() || cfg.s.is_empty() || cfg.p.is_empty() || cfg.q.is_empty() {
        return Err(invalid("every sweep axis needs at least one value"));
    }
    let mut qs = cfg.q.clone();
    qs.sort_by(|a, b| a.as_f64().total_cmp(&b.as_f64()));
    let mut rows = Vec::new();
    let mut monotone = true;
    let mut reduction = true;
    for &dim in &cfg.dims {
        for &s in &cfg.s {
            for &p in &cfg.p {
                let mut previous = f64::NEG_INFINITY;
                for &q in &qs {
                    let params = Params::new(dim, s, p, q)?;
                    let theta = theta_exponent(&params).map_err(|e| {
                        invalid(format!(
                            "row (N={dim}, s={s}, p={p}, q={}): {e}",
                            q_label(q)
                        ))
                    })?;
                    monotone &= theta >= previous;
                    previous = theta;
                    let homogeneous = theta_homogeneous(s, p);
                    if q.is_infinite() {
                        reduction &= theta == (s * p / (p - 1.0)).min(1.0);
                    }
                    rows.push(ExponentRow {
                        dim,
                        s,
                        p,
                        q: q_label(q),
                        theta,
                        theta_homogeneous: homogeneous,
                        regime: regime(&params)?.to_string(),
                    });
                }
            }
        }
    }
    let checks = vec![
        Check::holds("theta_nondecreasing_in_q", monotone),
        Check::holds("theta_reduces_at_q_infinity", reduction),
    ];
    Ok(ExponentTable { rows, checks })
}

/// Uniform grid `[-half_width, half_width]^N` with `nodes` per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderSpec {
    pub window: BallSpec,
    /// Number of rungs after the first.
    pub steps: usize,
    /// Dyadic shift levels.
    pub levels: u32,
}

/// Inputs of [`run_solver_study`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverStudyConfig {
    pub params: Params,
    pub grid: GridSpec,
    pub domain: Domain,
    /// Exterior datum; also its own far field.
    pub exterior: Expr,
    pub source: Expr,
    #[serde(default)]
    pub solve: SolveOptions,
    pub fit: BallSpec,
    /// Dyadic radii of the oscillation fit about `fit.center`.
    pub fit_radii: Vec<f64>,
    #[serde(default)]
    pub replacement: Option<BallSpec>,
    /// Source amplitudes of the comparison sweep; empty to skip.
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    #[serde(default)]
    pub ladder: Option<LadderSpec>,
    /// Exponent expected from an exact solution, if any.
    #[serde(default)]
    pub expected_exponent: Option<f64>,
    #[serde(default = "default_exponent_tol")]
    pub exponent_tol: f64,
    /// Measured exponents must reach this multiple of `Θ`.
    #[serde(default = "default_floor_factor")]
    pub floor_factor: f64,
    #[serde(default = "default_slope_tol")]
    pub slope_tol: f64,
}

fn default_exponent_tol() -> f64 {
    0.03
}

fn default_floor_factor() -> f64 {
    0.9
}

fn default_slope_tol() -> f64 {
    0.1
}

impl SolverStudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.params.require_grid_dim()?;
        require_positive("grid half width", self.grid.half_width)?;
        require_dyadic("fit radii", &self.fit_radii)?;
        if self.fit.center.len() != self.params.dim {
            return Err(invalid("fit center dimension differs from N"));
        }
        if self.amplitudes.len() == 1 {
            return Err(invalid("a comparison sweep needs at least two amplitudes"));
        }
        for a in &self.amplitudes {
            require_positive("amplitude", *a)?;
        }
        if let Some(l) = &self.ladder {
            require_positive("ladder window radius", l.window.radius)?;
            if l.levels < 2 {
                return Err(invalid("the ladder needs at least two shift levels"));
            }
        }
        for (n, v) in [
            ("solver tolerance", self.solve.tol),
            ("exponent tolerance", self.exponent_tol),
            ("floor factor", self.floor_factor),
            ("slope tolerance", self.slope_tol),
        ] {
            require_positive(n, v)?;
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<DirichletProblem> {
        ProblemSpec {
            params: self.params,
            grid: self.grid,
            domain: self.domain.clone(),
            exterior: self.exterior.clone(),
            source: self.source.clone(),
            solve: self.solve.clone(),
        }
        .problem()
    }
}

/// A Dirichlet problem described by registry expressions, as read by `fracp solve`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub params: Params,
    pub grid: GridSpec,
    pub domain: Domain,
    /// Exterior datum; also its own far field.
    pub exterior: Expr,
    pub source: Expr,
    #[serde(default)]
    pub solve: SolveOptions,
}

impl ProblemSpec {
    pub fn problem(&self) -> Result<DirichletProblem> {
        self.params.require_grid_dim()?;
        let grid = Grid::symmetric(self.params.dim, self.grid.half_width, self.grid.nodes)?;
        let exterior = sample_exact(&self.exterior, &grid)?;
        let source = sample_closed_form(&self.source, &grid, FarField::zero())?;
        DirichletProblem::new(self.params, self.domain.clone(), exterior, source)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverStudyReport {
    pub theta: f64,
    pub exponent_floor: f64,
    pub iterations: usize,
    pub residual_sup: f64,
    pub energy_monotone: bool,
    pub regularity: RegularityReport,
    pub measured_exponent: Option<f64>,
    pub comparison: Option<ComparisonReport>,
    pub sweep: Option<ComparisonSweep>,
    pub ladder: Option<LadderReport>,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub solution: Option<crate::GridFunction>,
}

impl SolverStudyReport {
    pub fn passed(&self) -> bool {
        all_pass(&self.checks)
    }
}

/// Solve, harmonic replacement, comparison, exponent fit and ladder, each stage tagged.
pub fn run_solver_study(cfg: &SolverStudyConfig) -> Result<SolverStudyReport> {
    cfg.validate()?;
    let params = cfg.params;
    let theta = theta_exponent(&params)?;
    let floor = cfg.floor_factor * theta;
    let problem = cfg.problem().map_err(|e| e.in_stage("setup"))?;
    let solved = solve_dirichlet(&problem, &cfg.solve).map_err(|e| e.in_stage("solve"))?;
    let energy_monotone = solved.energy_trace.windows(2).all(|w| w[1] <= w[0]);
    let mut checks = vec![
        Check::at_most("solver_residual", solved.residual_sup, cfg.solve.tol),
        Check::holds("energy_monotone", energy_monotone),
    ];

    let comparison = match &cfg.replacement {
        Some(ball) => {
            let v = harmonic_replacement(&solved.u, &ball.center, ball.radius, &params, &cfg.solve)
                .map_err(|e| e.in_stage("harmonic_replacement"))?;
            Some(
                comparison_diagnostic(
                    &solved.u,
                    &v.u,
                    &problem.source,
                    &ball.center,
                    ball.radius,
                    &params,
                )
                .map_err(|e| e.in_stage("comparison"))?,
            )
        }
        None => None,
    };
    let sweep = if cfg.amplitudes.is_empty() {
        None
    } else {
        let ball = cfg.replacement.as_ref().unwrap_or(&cfg.fit);
        let sw = comparison_sweep(
            &problem,
            &ball.center,
            ball.radius,
            &cfg.amplitudes,
            &cfg.solve,
        )
        .map_err(|e| e.in_stage("comparison"))?;
        let p_conj = params.p / (params.p - 1.0);
        checks.push(Check::within(
            "comparison_slope",
            sw.slope,
            p_conj,
            cfg.slope_tol,
        ));
        Some(sw)
    };

    let regularity = fit_holder_exponent(&solved.u, &cfg.fit.center, &cfg.fit_radii, params.p)
        .map_err(|e| e.in_stage("fit"))?;
    let measured = regularity.exponent.exponent();
    match measured {
        Some(e) => checks.push(Check::at_least("exponent_floor", e, floor)),
        None => checks.push(Check::holds("exponent_floor_flat_profile", true)),
    }
    if let Some(expected) = cfg.expected_exponent {
        checks.push(Check::within(
            "expected_exponent",
            measured.unwrap_or(f64::NAN),
            expected,
            cfg.exponent_tol,
        ));
    }

    let ladder = match &cfg.ladder {
        Some(spec) => {
            let rungs = theta_ladder(params.s, params.p, spec.steps);
            let shifts = dyadic_shifts(params.dim, spec.levels);
            let window = Window::ball(spec.window.center.clone(), spec.window.radius);
            let report = ladder_report(&solved.u, &params, &rungs, &shifts, &window)
                .map_err(|e| e.in_stage("ladder"))?;
            checks.push(Check::holds("ladder_stable", report.stable));
            Some(report)
        }
        None => None,
    };
    Ok(SolverStudyReport {
        theta,
        exponent_floor: floor,
        iterations: solved.iterations,
        residual_sup: solved.residual_sup,
        energy_monotone,
        regularity,
        measured_exponent: measured,
        comparison,
        sweep,
        ladder,
        checks,
        solution: Some(solved.u),
    })
}

/// Randomized sweep of the pointwise inequalities over an exponent grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InequalityConfig {
    pub ids: Vec<InequalityId>,
    pub p: Vec<f64>,
    /// Second exponents, used by the inequalities that take one.
    pub second: Vec<f64>,
    /// Total samples per inequality, split evenly over the exponent grid.
    pub samples: usize,
    /// Search budget for constants that are not explicit.
    pub budget: Budget,
    /// Safety factor applied to searched constants.
    pub constant_factor: f64,
}

impl Default for InequalityConfig {
    fn default() -> Self {
        InequalityConfig {
            ids: InequalityId::ALL.to_vec(),
            p: vec![2.0, 2.5, 3.0, 4.0],
            second: vec![1.5, 2.0, 3.0],
            samples: 1_000_000,
            budget: Budget {
                samples: 1 << 16,
                rounds: 40,
            },
            constant_factor: 1.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityRow {
    pub verdict: Verdict,
    pub estimate: Option<ConstantEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub rows: Vec<InequalityRow>,
    pub checks: Vec<Check>,
}

/// Sweeps every configured inequality; searched constants are inflated by `constant_factor`.
pub fn run_inequalities(cfg: &InequalityConfig, seed: u64) -> Result<InequalityReport> {
    if cfg.ids.is_empty() || cfg.p.is_empty() || cfg.samples == 0 {
        return Err(invalid(
            "an inequality sweep needs ids, exponents and samples",
        ));
    }
    require_positive("constant factor", cfg.constant_factor - 1.0 + f64::EPSILON)?;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (k, &id) in cfg.ids.iter().enumerate() {
        let seconds: Vec<f64> = if id.has_second_exponent() {
            cfg.second.clone()
        } else {
            vec![0.0]
        };
        let combos = cfg.p.len() * seconds.len();
        let per = cfg.samples.div_ceil(combos);
        let mut violations = 0;
        for (j, &p) in cfg.p.iter().enumerate() {
            for (i, &second) in seconds.iter().enumerate() {
                let e = Exponents::new(id, p, second)?;
                let stream = seed ^ ((k as u64) << 40 | (j as u64) << 20 | i as u64);
                let estimate = if id.needs_constant() {
                    Some(brute_force_constant(id, e, cfg.budget, stream)?)
                } else {
                    None
                };
                let constant = estimate.as_ref().map(|c| c.constant * cfg.constant_factor);
                let verdict = sweep(id, e, per, stream.wrapping_add(1), constant)?;
                violations += verdict.violations;
                rows.push(InequalityRow { verdict, estimate });
            }
        }
        checks.push(Check::at_most(
            &format!("{id}_violations"),
            violations as f64,
            0.0,
        ));
    }
    Ok(InequalityReport { rows, checks })
}

/// What a scenario runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Task {
    Sharpness(SharpnessConfig),
    Riesz(RieszConfig),
    ExponentTable(ExponentTableConfig),
    SolverStudy(SolverStudyConfig),
    Inequalities(InequalityConfig),
}

/// A named, seeded run with optional output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub task: Task,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Scenario::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(invalid(format!(
                "scenario name `{}` must be non-empty and use [A-Za-z0-9_-]",
                self.name
            )));
        }
        match &self.task {
            Task::Sharpness(c) => c.validate(),
            Task::Riesz(c) => c.validate(),
            Task::ExponentTable(_) => Ok(()),
            Task::SolverStudy(c) => c.validate(),
            Task::Inequalities(_) => Ok(()),
        }
    }
}

/// Result of [`run_scenario`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOutcome {
    pub name: String,
    pub passed: bool,
    /// Summary document: tool version, resolved config, checks and report.
    pub summary: serde_json::Value,
    pub files: Vec<PathBuf>,
}

fn finish<B: Serialize>(
    scenario: &Scenario,
    checks: Vec<Check>,
    report: &B,
    files: Vec<PathBuf>,
) -> Result<ScenarioOutcome> {
    let envelope = Envelope::new(scenario, checks, report);
    let summary = serde_json::to_value(&envelope)?;
    let mut files = files;
    if let Some(dir) = &scenario.output_dir {
        let path = dir.join(format!("{}.json", scenario.name));
        write_json(&path, &summary)?;
        files.push(path);
    }
    Ok(ScenarioOutcome {
        name: scenario.name.clone(),
        passed: envelope.passed,
        summary,
        files,
    })
}

/// Runs a scenario and writes its artifacts to `output_dir` when one is set.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioOutcome> {
    scenario.validate()?;
    let out = |suffix: &str| {
        scenario
            .output_dir
            .as_ref()
            .map(|d| d.join(format!("{}_{suffix}.csv", scenario.name)))
    };
    let mut files = Vec::new();
    match &scenario.task {
        Task::Sharpness(cfg) => {
            let r = run_sharpness_example(cfg)?;
            if let Some(path) = out("operator") {
                write_csv(&path, &r.samples)?;
                files.push(path);
            }
            if let Some(path) = out("oscillation") {
                write_csv(&path, &r.regularity.rows)?;
                files.push(path);
            }
            finish(scenario, r.checks.clone(), &r, files)
        }
        Task::Riesz(cfg) => {
            let r = run_riesz_example(cfg)?;
            if let Some(path) = out("probes") {
                write_csv(&path, &r.probes)?;
                files.push(path);
            }
            if let Some(path) = out("quotients") {
                write_csv(&path, &r.ladder)?;
                files.push(path);
            }
            finish(scenario, r.checks.clone(), &r, files)
        }
        Task::ExponentTable(cfg) => {
            let r = run_exponent_table(cfg)?;
            if let Some(path) = out("theta") {
                write_csv(&path, &r.rows)?;
                files.push(path);
            }
            finish(scenario, r.checks.clone(), &r, files)
        }
        Task::SolverStudy(cfg) => {
            let r = run_solver_study(cfg)?;
            if let (Some(path), Some(u)) = (out("solution"), &r.solution) {
                write_grid_csv(&path, u)?;
                files.push(path);
            }
            if let Some(path) = out("oscillation") {
                write_csv(&path, &r.regularity.rows)?;
                files.push(path);
            }
            finish(scenario, r.checks.clone(), &r, files)
        }
        Task::Inequalities(cfg) => {
            let r = run_inequalities(cfg, scenario.seed)?;
            if let Some(path) = out("verdicts") {
                let flat: Vec<VerdictRow> = r.rows.iter().map(VerdictRow::from).collect();
                write_csv(&path, &flat)?;
                files.push(path);
            }
            finish(scenario, r.checks.clone(), &r, files)
        }
    }
}

/// Runs independent scenarios in parallel, keeping input order.
pub fn run_scenarios(scenarios: &[Scenario]) -> Vec<Result<ScenarioOutcome>> {
    scenarios.par_iter().map(run_scenario).collect()
}

#[derive(Serialize)]
struct VerdictRow {
    id: String,
    p: f64,
    second: f64,
    constant: Option<f64>,
    samples: usize,
    violations: usize,
    min_margin: f64,
}

impl From<&InequalityRow> for VerdictRow {
    fn from(r: &InequalityRow) -> Self {
        let v = &r.verdict;
        VerdictRow {
            id: v.id.to_string(),
            p: v.p,
            second: v.second,
            constant: v.constant,
            samples: v.samples,
            violations: v.violations,
            min_margin: v.min_margin,
        }
    }
}
