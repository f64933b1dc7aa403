use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diff::{delta, Shift, Window};
use crate::error::{invalid, Error, Result};
use crate::grid::GridFunction;
use crate::params::Integrability;

fn check_common(beta: f64, shifts: &[Shift]) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(format!(
            "smoothness exponent must be positive, got {beta}"
        )));
    }
    if shifts.is_empty() {
        return Err(invalid("at least one shift is required"));
    }
    if shifts.iter().any(|s| s.0.iter().all(|k| *k == 0)) {
        return Err(invalid("zero shift"));
    }
    Ok(())
}

fn sup_quotient(
    u: &GridFunction,
    beta: f64,
    q: Integrability,
    shifts: &[Shift],
    window: &Window,
    order: u8,
) -> Result<f64> {
    check_common(beta, shifts)?;
    let mut best: f64 = 0.0;
    for shift in shifts {
        let d = delta(u, shift, order, window)?;
        let len = shift.length(u.grid());
        best = best.max(d.lq_norm(q.as_f64()) / len.powf(beta));
    }
    Ok(best)
}

/// `sup_h ‖δ_h u / |h|^β‖_{L^q(window)}` over the given shifts.
pub fn nikolskii_seminorm(
    u: &GridFunction,
    beta: f64,
    q: Integrability,
    shifts: &[Shift],
    window: &Window,
) -> Result<f64> {
    sup_quotient(u, beta, q, shifts, window, 1)
}

/// `sup_h ‖δ²_h u / |h|^β‖_{L^q(window)}` over the given shifts.
pub fn besov_seminorm(
    u: &GridFunction,
    beta: f64,
    q: Integrability,
    shifts: &[Shift],
    window: &Window,
) -> Result<f64> {
    sup_quotient(u, beta, q, shifts, window, 2)
}

/// Discrete Slobodeckii double integral with an estimate of the omitted diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlobodeckiiValue {
    /// `Σ_{i≠j} w_i w_j |u_i - u_j|^q |x_i - x_j|^{-N-βq}`.
    pub value: f64,
    /// Estimated contribution of the excluded near-diagonal cells.
    pub diagonal_omission: f64,
}

/// `[u]^q_{W^{β,q}(window)}`, the `q`-th power of the Slobodeckii seminorm.
pub fn slobodeckii_seminorm(
    u: &GridFunction,
    beta: f64,
    q: f64,
    window: &Window,
) -> Result<SlobodeckiiValue> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!(
            "Slobodeckii exponent must lie in (0,1), got {beta}"
        )));
    }
    if q < 1.0 {
        return Err(invalid("q must be >= 1"));
    }
    let grid = u.grid();
    let nodes = window.resolve(grid)?;
    let dim = grid.dim();
    let exponent = dim as f64 + beta * q;
    let pts: Vec<Vec<f64>> = nodes.nodes.iter().map(|&f| grid.node(f)).collect();
    let vals: Vec<f64> = nodes.nodes.iter().map(|&f| u.values()[f]).collect();
    let w = &nodes.weights;
    let rows: Vec<f64> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..pts.len() {
                if i == j {
                    continue;
                }
                let d2: f64 = pts[i]
                    .iter()
                    .zip(&pts[j])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum();
                let du = (vals[i] - vals[j]).abs();
                if du > 0.0 {
                    acc += w[j] * du.powf(q) * d2.powf(-0.5 * exponent);
                }
            }
            w[i] * acc
        })
        .collect();
    let value: f64 = rows.iter().sum();

    // Near-diagonal mass: ∫_{cell} |z|^{q-N-βq} |∇u|^q, with the local gradient from grid neighbours.
    let a = q - exponent;
    let cell = grid.cell_volume();
    let radius = if dim == 1 {
        0.5 * grid.spacing(0)
    } else {
        (cell / PI).sqrt()
    };
    let kernel_mass = if dim == 1 {
        2.0 * radius.powf(a + 1.0) / (a + 1.0)
    } else {
        2.0 * PI * radius.powf(a + 2.0) / (a + 2.0)
    };
    let mut omission = 0.0;
    for (k, &flat) in nodes.nodes.iter().enumerate() {
        let idx = grid.multi_index(flat);
        let mut g2 = 0.0;
        for axis in 0..dim {
            let mut fwd = idx;
            fwd[axis] += 1;
            let mut bwd = idx;
            bwd[axis] -= 1;
            let h = grid.spacing(axis);
            let at = |j: [i64; 2]| grid.flat_index(j).map(|f| u.values()[f]);
            let slope = match (at(fwd), at(bwd)) {
                (Some(f), Some(b)) => (f - b) / (2.0 * h),
                (Some(f), None) => (f - vals[k]) / h,
                (None, Some(b)) => (vals[k] - b) / h,
                _ => 0.0,
            };
            g2 += slope * slope;
        }
        omission += w[k] * g2.powf(0.5 * q) * kernel_mass;
    }
    Ok(SlobodeckiiValue {
        value,
        diagonal_omission: omission,
    })
}

/// `sup_{x≠y} |u(x) - u(y)| / |x-y|^δ` over window nodes.
pub fn holder_seminorm(u: &GridFunction, exponent: f64, window: &Window) -> Result<f64> {
    if !(exponent > 0.0 && exponent <= 1.0) {
        return Err(invalid(format!(
            "Hölder exponent must lie in (0,1], got {exponent}"
        )));
    }
    let grid = u.grid();
    let nodes = window.resolve(grid)?;
    let pts: Vec<Vec<f64>> = nodes.nodes.iter().map(|&f| grid.node(f)).collect();
    let vals: Vec<f64> = nodes.nodes.iter().map(|&f| u.values()[f]).collect();
    let best = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut m: f64 = 0.0;
            for j in (i + 1)..pts.len() {
                let d2: f64 = pts[i]
                    .iter()
                    .zip(&pts[j])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum();
                m = m.max((vals[i] - vals[j]).abs() / d2.powf(0.5 * exponent));
            }
            m
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Nodes of a ball with weights: clipped dual cells in 1D, cell volumes in 2D.
fn ball_nodes(u: &GridFunction, center: &[f64], radius: f64) -> Result<(Vec<usize>, Vec<f64>)> {
    let grid = u.grid();
    if center.len() != grid.dim() {
        return Err(invalid("ball center dimension differs from grid dimension"));
    }
    let min_h = (0..grid.dim())
        .map(|a| grid.spacing(a))
        .fold(f64::INFINITY, f64::min);
    if radius < 1.5 * min_h {
        return Err(Error::Unresolved(format!(
            "ball of radius {radius} spans fewer than 3 cells (spacing {min_h})"
        )));
    }
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    if grid.dim() == 1 {
        let h = grid.spacing(0);
        let (lo_box, hi_box) = (grid.lower()[0], grid.upper()[0]);
        let (lo, hi) = (
            (center[0] - radius).max(lo_box),
            (center[0] + radius).min(hi_box),
        );
        for flat in 0..grid.len() {
            let x = grid.node(flat)[0];
            let a = (x - 0.5 * h).max(lo);
            let b = (x + 0.5 * h).min(hi);
            if b > a {
                nodes.push(flat);
                weights.push(b - a);
            }
        }
    } else {
        let vol = grid.cell_volume();
        for flat in 0..grid.len() {
            let x = grid.node(flat);
            let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum();
            if d2.sqrt() <= radius * (1.0 + 1e-12) {
                nodes.push(flat);
                weights.push(vol);
            }
        }
    }
    Ok((nodes, weights))
}

/// `∫_{B_r(x0)} |u - (u)_{B_r}|^p dx`.
pub fn campanato_excess(u: &GridFunction, center: &[f64], radius: f64, p: f64) -> Result<f64> {
    let (nodes, weights) = ball_nodes(u, center, radius)?;
    let mass: f64 = weights.iter().sum();
    let mean = nodes
        .iter()
        .zip(&weights)
        .map(|(&f, w)| w * u.values()[f])
        .sum::<f64>()
        / mass;
    Ok(nodes
        .iter()
        .zip(&weights)
        .map(|(&f, w)| w * (u.values()[f] - mean).abs().powf(p))
        .sum())
}

/// `osc_{B_r(x0)} u` of the interpolant: nodes inside the ball plus samples on its boundary.
pub fn oscillation(u: &GridFunction, center: &[f64], radius: f64) -> Result<f64> {
    ball_nodes(u, center, radius)?;
    let grid = u.grid();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut take = |v: f64| {
        lo = lo.min(v);
        hi = hi.max(v);
    };
    for flat in 0..grid.len() {
        let x = grid.node(flat);
        let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum();
        if d2.sqrt() <= radius * (1.0 + 1e-12) {
            take(u.values()[flat]);
        }
    }
    if grid.dim() == 1 {
        for y in [center[0] - radius, center[0] + radius] {
            if grid.contains(&[y]) {
                take(u.evaluate(&[y])?);
            }
        }
        return Ok(hi - lo);
    }
    let on_circle = |t: f64| -> Option<Result<f64>> {
        let y = [center[0] + radius * t.cos(), center[1] + radius * t.sin()];
        grid.contains(&y).then(|| u.evaluate(&y))
    };
    let h = grid.spacing(0).min(grid.spacing(1));
    let count = ((4.0 * PI * radius / h).ceil() as usize).max(16);
    let step = 2.0 * PI / count as f64;
    let mut samples = Vec::with_capacity(count);
    for k in 0..count {
        let t = step * k as f64;
        if let Some(v) = on_circle(t) {
            samples.push((t, v?));
        }
    }
    // Polish the extreme samples along the arc.
    let arg = |better: fn(f64, f64) -> bool| {
        samples
            .iter()
            .copied()
            .reduce(|a, b| if better(b.1, a.1) { b } else { a })
    };
    for (sign, best) in [(1.0, arg(|a, b| a > b)), (-1.0, arg(|a, b| a < b))] {
        let Some((t0, v0)) = best else { continue };
        take(v0);
        let score = |t: f64| match on_circle(t) {
            Some(Ok(v)) => sign * v,
            _ => f64::NEG_INFINITY,
        };
        let (mut a, mut b) = (t0 - step, t0 + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..40 {
            let (c, d) = (b - g * (b - a), a + g * (b - a));
            if score(c) >= score(d) {
                b = d;
            } else {
                a = c;
            }
        }
        if let Some(v) = on_circle(0.5 * (a + b)) {
            take(v?);
        }
    }
    Ok(hi - lo)
}

/// Weighted mean `⨍_{B_r} |u|^p`.
pub fn ball_mean_power(u: &GridFunction, center: &[f64], radius: f64, p: f64) -> Result<f64> {
    let (nodes, weights) = ball_nodes(u, center, radius)?;
    let mass: f64 = weights.iter().sum();
    Ok(nodes
        .iter()
        .zip(&weights)
        .map(|(&f, w)| w * u.values()[f].abs().powf(p))
        .sum::<f64>()
        / mass)
}

/// `(∫_{B_r} |u|^q)^{1/q}`, or the maximum modulus for `q = ∞`.
pub fn ball_lq_norm(
    u: &GridFunction,
    center: &[f64],
    radius: f64,
    q: Integrability,
) -> Result<f64> {
    let (nodes, weights) = ball_nodes(u, center, radius)?;
    Ok(match q {
        Integrability::Infinite => nodes
            .iter()
            .fold(0.0f64, |m, &f| m.max(u.values()[f].abs())),
        Integrability::Finite(q) => nodes
            .iter()
            .zip(&weights)
            .map(|(&f, w)| w * u.values()[f].abs().powf(q))
            .sum::<f64>()
            .powf(1.0 / q),
    })
}

/// Measure of the discrete ball used by the ball statistics.
pub fn ball_measure(u: &GridFunction, center: &[f64], radius: f64) -> Result<f64> {
    Ok(ball_nodes(u, center, radius)?.1.iter().sum())
}
