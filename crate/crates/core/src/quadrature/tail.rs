use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::expr::Expr;
use crate::grid::GridFunction;
use crate::params::{abs_pow, Integrability};
use crate::quad::{adaptive, adaptive_breaks, Integral, Tolerance};

/// A scalar field on `R^N` that can be sampled anywhere.
pub trait Field: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64>;
    /// Exponent `γ` with `|u(x)| = O(|x|^γ)` at infinity.
    fn growth(&self) -> f64;
    /// A point where the field is not smooth.
    fn breakpoint(&self) -> Option<Vec<f64>> {
        None
    }
}

impl Field for GridFunction {
    fn dim(&self) -> usize {
        self.grid().dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.evaluate(x)
    }
    fn growth(&self) -> f64 {
        self.far_field().growth()
    }
}

/// A closed-form expression viewed on `R^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedField {
    pub expr: Expr,
    pub dim: usize,
}

impl ClosedField {
    pub fn new(expr: Expr, dim: usize) -> Self {
        ClosedField { expr, dim }
    }
}

impl Field for ClosedField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        let v = self.expr.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Singular(format!("{} at {x:?}", self.expr)))
        }
    }
    fn growth(&self) -> f64 {
        self.expr.growth()
    }
    fn breakpoint(&self) -> Option<Vec<f64>> {
        self.expr.singular_point().map(|c| {
            (0..self.dim)
                .map(|i| c.get(i).copied().unwrap_or(0.0))
                .collect()
        })
    }
}

pub(crate) const TAIL_TOL: f64 = 1e-9;

fn sphere_measure(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            // N ω_N = 2 π^{N/2} / Γ(N/2) via the recursion |S^{N-1}| = 2π/(N-2) |S^{N-3}|.
            let mut m = if dim.is_multiple_of(2) {
                2.0 * PI
            } else {
                4.0 * PI
            };
            let mut d = if dim.is_multiple_of(2) { 2 } else { 3 };
            while d < dim {
                m *= 2.0 * PI / d as f64;
                d += 2;
            }
            m
        }
    }
}

/// Surface measure `N ω_N` of the unit sphere in `R^N`.
pub fn unit_sphere_measure(dim: usize) -> f64 {
    sphere_measure(dim)
}

struct Sampler<'a> {
    field: &'a dyn Field,
    error: Option<Error>,
}

impl Sampler<'_> {
    fn at(&mut self, x: &[f64]) -> f64 {
        match self.field.value(x) {
            Ok(v) => v,
            Err(e) => {
                if self.error.is_none() {
                    self.error = Some(e);
                }
                0.0
            }
        }
    }
}

/// Integrates a direction-dependent radial integral over the unit sphere (N = 1 or 2).
fn over_sphere(
    dim: usize,
    extra_angles: &[f64],
    mut radial: impl FnMut([f64; 2]) -> Integral,
) -> Integral {
    if dim == 1 {
        return radial([1.0, 0.0]) + radial([-1.0, 0.0]);
    }
    let mut breaks = vec![0.0, 0.5 * PI, PI, 1.5 * PI, 2.0 * PI];
    for a in extra_angles {
        let t = a.rem_euclid(2.0 * PI);
        if breaks.iter().all(|b| (b - t).abs() > 1e-9) {
            breaks.push(t);
        }
    }
    breaks.sort_by(f64::total_cmp);
    let mut inner_err = 0.0;
    let mut calls = 0usize;
    let outer = adaptive_breaks(
        |th: f64| {
            let r = radial([th.cos(), th.sin()]);
            inner_err += r.error;
            calls += 1;
            r.value
        },
        &breaks,
        Tolerance::new(1e-300, TAIL_TOL).with_max_intervals(200),
    );
    Integral {
        value: outer.value,
        error: outer.error + 2.0 * PI * inner_err / calls.max(1) as f64,
        evals: outer.evals,
    }
}

fn angles_towards(field: &dyn Field, from: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    if from.len() == 2 {
        if let Some(c) = field.breakpoint() {
            let d = [c[0] - from[0], c[1] - from[1]];
            if d[0] != 0.0 || d[1] != 0.0 {
                out.push(d[1].atan2(d[0]));
            }
        }
    }
    out
}

/// `∫_{|y-c| > R} |u(y)|^q |x-y|^{-N-α} dy` for `|x - c| < R`, in polar coordinates about `x`.
pub(crate) fn exterior_integral(
    field: &dyn Field,
    x: &[f64],
    center: &[f64],
    radius: f64,
    q: f64,
    alpha: f64,
) -> Result<Integral> {
    let dim = field.dim();
    let kappa = alpha - field.growth() * q;
    if kappa <= 0.0 {
        return Err(Error::NonIntegrable(format!(
            "growth gamma q = {} >= alpha = {alpha}",
            field.growth() * q
        )));
    }
    let off: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
    let off2: f64 = off.iter().map(|v| v * v).sum();
    if off2.sqrt() >= radius {
        return Err(invalid(
            "evaluation point must lie inside the excluded ball",
        ));
    }
    let mut sampler = Sampler { field, error: None };
    let tol = Tolerance::new(1e-300, TAIL_TOL).with_max_intervals(200);
    let reach = 8.0 * (radius + x.iter().map(|v| v * v).sum::<f64>().sqrt() + 1.0);
    let angles = angles_towards(field, x);
    let out = over_sphere(dim, &angles, |dir| {
        let b: f64 = off.iter().zip(dir).map(|(o, d)| o * d).sum();
        let rho = -b + (b * b + radius * radius - off2).sqrt();
        let mut breaks = vec![rho];
        let mut r = rho;
        while r < reach {
            r *= 2.0;
            breaks.push(r);
        }
        let r_far = r;
        let mut point = vec![0.0; dim];
        let mut f = |r: f64| {
            for i in 0..dim {
                point[i] = x[i] + r * dir[i];
            }
            abs_pow(sampler.at(&point), q)
        };
        let body = adaptive_breaks(|r| f(r) * r.powf(-1.0 - alpha), &breaks, tol);
        let tail = adaptive(
            |t: f64| {
                if t <= 0.0 {
                    return 0.0;
                }
                let r = r_far * t.powf(-1.0 / kappa);
                f(r) * r_far.powf(-alpha) / kappa * t.powf(alpha / kappa - 1.0)
            },
            0.0,
            1.0,
            tol,
        );
        body + tail
    });
    match sampler.error {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

fn check_tail_args(
    field: &dyn Field,
    center: &[f64],
    radius: f64,
    q: f64,
    alpha: f64,
) -> Result<()> {
    if field.dim() > 2 || field.dim() == 0 {
        return Err(invalid("tails are computed for N in {1,2}"));
    }
    if center.len() != field.dim() {
        return Err(invalid("center dimension differs from the field dimension"));
    }
    if !(radius > 0.0 && q > 0.0 && alpha > 0.0) {
        return Err(invalid("tail needs R > 0, q > 0 and alpha > 0"));
    }
    Ok(())
}

/// `Tail_{q,α}(u; x0, R)^q = R^α ∫_{|x-x0|>R} |u|^q |x-x0|^{-N-α} dx`.
pub fn tail_q_power(
    field: &dyn Field,
    center: &[f64],
    radius: f64,
    q: f64,
    alpha: f64,
) -> Result<f64> {
    check_tail_args(field, center, radius, q, alpha)?;
    let i = exterior_integral(field, center, center, radius, q, alpha)?;
    Ok(radius.powf(alpha) * i.value)
}

/// `Tail_{q,α}(u; x0, R)`.
pub fn tail(field: &dyn Field, center: &[f64], radius: f64, q: f64, alpha: f64) -> Result<f64> {
    Ok(tail_q_power(field, center, radius, q, alpha)?.powf(1.0 / q))
}

/// Exact `Tail^q` of `A |x - x0|^γ`: `A^q N ω_N R^{γq} / (α - γq)`.
pub fn tail_power_law(
    amplitude: f64,
    gamma: f64,
    dim: usize,
    q: f64,
    alpha: f64,
    radius: f64,
) -> Result<f64> {
    if gamma * q >= alpha {
        return Err(Error::NonIntegrable(format!(
            "gamma q = {} >= alpha = {alpha}",
            gamma * q
        )));
    }
    Ok(
        amplitude.abs().powf(q) * sphere_measure(dim) * radius.powf(gamma * q)
            / (alpha - gamma * q),
    )
}

/// `∫_{B_R(c)} |u|^q`.
pub fn ball_integral(field: &dyn Field, center: &[f64], radius: f64, q: f64) -> Result<f64> {
    let dim = field.dim();
    let mut sampler = Sampler { field, error: None };
    let tol = Tolerance::new(1e-300, TAIL_TOL).with_max_intervals(200);
    let angles = angles_towards(field, center);
    let mut radial_breaks = vec![0.0, radius];
    if let Some(c) = field.breakpoint() {
        let d: f64 = c
            .iter()
            .zip(center)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        if d > 0.0 && d < radius {
            radial_breaks.insert(1, d);
        }
    }
    let out = over_sphere(dim, &angles, |dir| {
        let mut point = vec![0.0; dim];
        adaptive_breaks(
            |r: f64| {
                for i in 0..dim {
                    point[i] = center[i] + r * dir[i];
                }
                abs_pow(sampler.at(&point), q) * r.powi(dim as i32 - 1)
            },
            &radial_breaks,
            tol,
        )
    });
    match sampler.error {
        Some(e) => Err(e),
        None => Ok(out.value),
    }
}

/// `sup_{B_R(c)} |u|` over a dense polar sample.
pub fn ball_sup(field: &dyn Field, center: &[f64], radius: f64) -> Result<f64> {
    let dim = field.dim();
    let mut best: f64 = field.value(center)?.abs();
    let radii = 256;
    let angles = if dim == 1 { 2 } else { 256 };
    for k in 1..=radii {
        let r = radius * k as f64 / radii as f64;
        for j in 0..angles {
            let th = 2.0 * PI * j as f64 / angles as f64;
            let dir = [th.cos(), th.sin()];
            let pt: Vec<f64> = (0..dim).map(|i| center[i] + r * dir[i]).collect();
            best = best.max(field.value(&pt)?.abs());
        }
    }
    if let Some(c) = field.breakpoint() {
        let d: f64 = c
            .iter()
            .zip(center)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        if d <= radius {
            if let Ok(v) = field.value(&c[..dim]) {
                best = best.max(v.abs());
            }
        }
    }
    Ok(best)
}

/// `‖u‖_{L^m(B_R(c))}^q`, with `m = ∞` handled by sampling.
fn ball_norm_pow(
    field: &dyn Field,
    center: &[f64],
    radius: f64,
    m: Integrability,
    q: f64,
) -> Result<f64> {
    match m {
        Integrability::Infinite => Ok(ball_sup(field, center, radius)?.powf(q)),
        Integrability::Finite(m) => Ok(ball_integral(field, center, radius, m)?.powf(q / m)),
    }
}

/// One side-by-side comparison `lhs <= rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl Bound {
    pub(crate) fn new(lhs: f64, rhs: f64, slack: f64) -> Self {
        let pass = lhs <= rhs + slack * lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        Bound { lhs, rhs, pass }
    }
}

/// Geometry and exponents for the tail comparison lemmas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailLemmaConfig {
    pub q: f64,
    pub alpha: f64,
    pub x0: Vec<f64>,
    pub x1: Vec<f64>,
    /// Inner radius `r`.
    pub r: f64,
    /// Outer radius `R`.
    pub big_r: f64,
    /// Integrability of the local norm in the sharpened form; `None` skips it.
    pub m: Option<Integrability>,
    #[serde(default = "default_slack")]
    pub slack: f64,
}

fn default_slack() -> f64 {
    1e-8
}

/// Both sides of the tail lemmas for one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailLemmaReport {
    /// Shifted-point tail against the centred tail over the same ball.
    pub shifted_point: Bound,
    /// Tail over a small ball against the tail over a containing ball plus a local norm.
    pub nested_balls: Bound,
    /// Same with the local `L^m` norm.
    pub nested_balls_lm: Option<Bound>,
}

impl TailLemmaReport {
    pub fn pass(&self) -> bool {
        self.shifted_point.pass
            && self.nested_balls.pass
            && self.nested_balls_lm.map(|b| b.pass).unwrap_or(true)
    }
}

fn sample_ball_points(center: &[f64], r: f64) -> Vec<Vec<f64>> {
    let mut pts = vec![center.to_vec()];
    if center.len() == 1 {
        for t in [-1.0, -0.75, -0.5, -0.25, 0.25, 0.5, 0.75, 1.0] {
            pts.push(vec![center[0] + t * r]);
        }
    } else {
        for ring in [0.5, 1.0] {
            for j in 0..8 {
                let th = PI * j as f64 / 4.0;
                pts.push(vec![
                    center[0] + ring * r * th.cos(),
                    center[1] + ring * r * th.sin(),
                ]);
            }
        }
    }
    pts
}

/// Evaluates both sides of the tail comparison lemmas.
///
/// The shifted-point bound takes the supremum over a fixed sample of `B̄_r(x0)`.
pub fn verify_tail_lemmas(field: &dyn Field, cfg: &TailLemmaConfig) -> Result<TailLemmaReport> {
    let dim = field.dim();
    check_tail_args(field, &cfg.x0, cfg.big_r, cfg.q, cfg.alpha)?;
    if cfg.x1.len() != dim {
        return Err(invalid("x1 dimension differs from the field dimension"));
    }
    let (q, alpha, r, big_r) = (cfg.q, cfg.alpha, cfg.r, cfg.big_r);
    if !(r > 0.0 && r < big_r) {
        return Err(Error::Hypothesis(format!(
            "need 0 < r < R, got r = {r}, R = {big_r}"
        )));
    }
    let n = dim as f64;

    // Tail seen from a point of the inner ball versus the centred tail.
    let centred = tail_q_power(field, &cfg.x0, big_r, q, alpha)?;
    let mut sup: f64 = 0.0;
    for x in sample_ball_points(&cfg.x0, r * (1.0 - 1e-12)) {
        let v = exterior_integral(field, &x, &cfg.x0, big_r, q, alpha)?.value;
        sup = sup.max(v);
    }
    let lhs1 = big_r.powf(alpha) * sup;
    let rhs1 = (big_r / (big_r - r)).powf(n + alpha) * centred;
    let shifted_point = Bound::new(lhs1, rhs1, cfg.slack);

    // Nested balls B_r(x0) ⊂ B_R(x1).
    let sep: f64 = cfg
        .x0
        .iter()
        .zip(&cfg.x1)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    if sep + r > big_r * (1.0 + 1e-14) {
        return Err(Error::Hypothesis(format!(
            "B_r(x0) must lie inside B_R(x1): |x1 - x0| + r = {} > R = {big_r}",
            sep + r
        )));
    }
    let small = tail_q_power(field, &cfg.x0, r, q, alpha)?;
    let outer = tail_q_power(field, &cfg.x1, big_r, q, alpha)?;
    let lead = (r / big_r).powf(alpha) * (big_r / (big_r - sep)).powf(n + alpha) * outer;
    let local_q = ball_integral(field, &cfg.x1, big_r, q)?;
    let nested_balls = Bound::new(small, lead + r.powf(-n) * local_q, cfg.slack);

    let nested_balls_lm = match cfg.m {
        None => None,
        Some(m) => {
            let factor = match m {
                Integrability::Infinite => sphere_measure(dim) / alpha,
                Integrability::Finite(mv) => {
                    if mv <= q {
                        return Err(Error::Hypothesis(format!(
                            "need m > q, got m = {mv}, q = {q}"
                        )));
                    }
                    (sphere_measure(dim) * (mv - q) / (alpha * mv + n * q)).powf((mv - q) / mv)
                        * r.powf(-q * n / mv)
                }
            };
            let norm = ball_norm_pow(field, &cfg.x1, big_r, m, q)?;
            Some(Bound::new(small, lead + factor * norm, cfg.slack))
        }
    };
    Ok(TailLemmaReport {
        shifted_point,
        nested_balls,
        nested_balls_lm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed(id: &str, dim: usize) -> ClosedField {
        ClosedField::new(id.parse().unwrap(), dim)
    }

    #[test]
    fn tail_of_power_law_matches_closed_form() {
        for (dim, gamma, q, alpha, radius) in [
            (1, 0.5, 1.0, 1.0, 1.0),
            (1, 0.3, 2.0, 1.2, 0.7),
            (2, 0.25, 1.5, 0.9, 1.3),
        ] {
            let f = closed(&format!("power:{gamma}"), dim);
            let center = vec![0.0; dim];
            let num = tail_q_power(&f, &center, radius, q, alpha).unwrap();
            let exact = tail_power_law(1.0, gamma, dim, q, alpha, radius).unwrap();
            assert!((num - exact).abs() < 1e-7 * exact, "{dim} {num} {exact}");
        }
        assert_eq!(tail_power_law(1.0, 0.5, 1, 1.0, 1.0, 1.0).unwrap(), 4.0);
        assert!(tail_power_law(1.0, 1.0, 1, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn shifted_point_reference_instance() {
        let f = closed("const:1", 1);
        let cfg = TailLemmaConfig {
            q: 1.0,
            alpha: 1.0,
            x0: vec![0.0],
            x1: vec![0.0],
            r: 0.5,
            big_r: 1.0,
            m: Some(Integrability::Infinite),
            slack: 1e-8,
        };
        let rep = verify_tail_lemmas(&f, &cfg).unwrap();
        assert!((rep.shifted_point.lhs - 8.0 / 3.0).abs() < 1e-8, "{rep:?}");
        assert!((rep.shifted_point.rhs - 8.0).abs() < 1e-8);
        assert!(rep.pass());
    }

    #[test]
    fn nested_balls_hypothesis() {
        let f = closed("const:1", 1);
        let cfg = TailLemmaConfig {
            q: 1.0,
            alpha: 1.0,
            x0: vec![0.8],
            x1: vec![0.0],
            r: 0.5,
            big_r: 1.0,
            m: None,
            slack: 1e-8,
        };
        assert!(matches!(
            verify_tail_lemmas(&f, &cfg),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn sphere_measures() {
        assert_eq!(unit_sphere_measure(1), 2.0);
        assert!((unit_sphere_measure(2) - 2.0 * PI).abs() < 1e-15);
        assert!((unit_sphere_measure(4) - 2.0 * PI * PI).abs() < 1e-12);
    }
}
