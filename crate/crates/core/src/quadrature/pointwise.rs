use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::expr::Expr;
use crate::params::{jp, Params};
use crate::quad::{adaptive, adaptive_breaks, Integral, Tolerance};

/// Controls for meshfree evaluation of the operator at a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadControls {
    /// Relative accuracy requested from every adaptive stage.
    pub tol: f64,
    /// Number of dyadic shells resolved below the singular scale.
    pub inner_octaves: u32,
    /// Far radius, in units of the problem scale, where the mapped tail begins.
    pub far_factor: f64,
    /// Panel budget per adaptive integration.
    pub max_intervals: usize,
}

impl Default for QuadControls {
    fn default() -> Self {
        QuadControls {
            tol: 1e-9,
            inner_octaves: 16,
            far_factor: 8.0,
            max_intervals: 200,
        }
    }
}

/// Operator value at a point with its quadrature error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointValue {
    pub value: f64,
    pub error: f64,
    /// Set when the error estimate misses the requested tolerance.
    pub flagged: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Meshfree evaluation of `(-Δ_p)^s u(x)` for a closed-form `u`.
///
/// The principal value is taken by pairing `y = x ± r θ`; the radial integral uses dyadic
/// shells around the distance to the expression's singular point and a mapped far tail.
pub fn apply_operator_point(
    expr: &Expr,
    x: &[f64],
    params: &Params,
    controls: &QuadControls,
) -> Result<PointValue> {
    params.validate()?;
    if x.len() != params.dim || params.dim > 2 {
        return Err(invalid(format!(
            "point evaluation supports N in {{1,2}} with a matching point, got N = {} and |x| = {}",
            params.dim,
            x.len()
        )));
    }
    let sp = params.sp();
    let p = params.p;
    let growth = expr.growth();
    let kappa = sp - growth * (p - 1.0);
    if kappa <= 0.0 {
        return Err(Error::NonIntegrable(format!(
            "growth gamma(p-1) = {} >= sp = {sp}",
            growth * (p - 1.0)
        )));
    }
    let u0 = expr.eval(x);
    if !u0.is_finite() {
        return Err(Error::Singular(format!("{expr} is not finite at {x:?}")));
    }
    let sing: Option<Vec<f64>> = expr.singular_point().map(|c| {
        (0..params.dim)
            .map(|i| c.get(i).copied().unwrap_or(0.0))
            .collect()
    });
    let (scale, sing_dir) = match &sing {
        Some(c) => {
            let d: Vec<f64> = c.iter().zip(x).map(|(a, b)| a - b).collect();
            let dn = norm(&d);
            if dn > 0.0 {
                (dn, Some(d[1.min(d.len() - 1)].atan2(d[0])))
            } else {
                (1.0, None)
            }
        }
        None => (1.0, None),
    };
    let far = controls.far_factor * (1.0 + norm(x) + sing.as_deref().map(norm).unwrap_or(0.0));
    let rho_in = scale * 0.5f64.powi(controls.inner_octaves as i32);
    let mut breaks = Vec::new();
    let mut r = rho_in;
    while r < far {
        breaks.push(r);
        r *= 2.0;
    }
    breaks.push(r);
    let r_far = r;
    let floor = controls.tol * 1e-2 * (1.0 + u0.abs()).powf(p - 1.0) * scale.powf(-sp);
    let tol = Tolerance::new(floor / breaks.len() as f64, controls.tol)
        .with_max_intervals(controls.max_intervals);

    let radial = |dir: [f64; 2]| -> Integral {
        let pair = |r: f64| -> f64 {
            let mut plus = [0.0; 2];
            let mut minus = [0.0; 2];
            for i in 0..x.len() {
                plus[i] = x[i] + r * dir[i];
                minus[i] = x[i] - r * dir[i];
            }
            let n = x.len();
            jp(u0 - expr.eval(&plus[..n]), p) + jp(u0 - expr.eval(&minus[..n]), p)
        };
        let body = adaptive_breaks(|r| pair(r) * r.powf(-1.0 - sp), &breaks, tol);
        let tail = adaptive(
            |t: f64| {
                if t <= 0.0 {
                    return 0.0;
                }
                let r = r_far * t.powf(-1.0 / kappa);
                pair(r) * r_far.powf(-sp) / kappa * t.powf(sp / kappa - 1.0)
            },
            0.0,
            1.0,
            tol,
        );
        // Inner core [0, ρ]: pair(r) ≈ c r^a extrapolated from two scales, checked one octave down.
        let power_rem = |rho: f64| -> Option<f64> {
            let (hi, lo) = (pair(rho), pair(0.5 * rho));
            if hi == 0.0 && lo == 0.0 {
                return Some(0.0);
            }
            if hi * lo <= 0.0 {
                return None;
            }
            let a = (hi / lo).log2();
            (a > sp + 1e-3).then(|| hi * rho.powf(-sp) / (a - sp))
        };
        let half = adaptive(|r| pair(r) * r.powf(-1.0 - sp), 0.5 * rho_in, rho_in, tol);
        let (core, core_err) = match (power_rem(rho_in), power_rem(0.5 * rho_in)) {
            (Some(a), Some(b)) => (a, (a - (b + half.value)).abs() + half.error),
            _ => (0.0, pair(rho_in).abs() * rho_in.powf(-sp) / sp),
        };
        Integral {
            value: core + body.value + tail.value,
            error: core_err + body.error + tail.error,
            evals: body.evals + tail.evals + half.evals,
        }
    };

    let total = if params.dim == 1 {
        let r = radial([1.0, 0.0]);
        Integral {
            value: 2.0 * r.value,
            error: 2.0 * r.error,
            evals: r.evals,
        }
    } else {
        let mut angle_breaks = vec![0.0, 0.5 * PI, PI];
        if let Some(theta) = sing_dir {
            let t = theta.rem_euclid(PI);
            if t > 1e-12 && (t - 0.5 * PI).abs() > 1e-12 && PI - t > 1e-12 {
                angle_breaks.push(t);
            }
        }
        angle_breaks.sort_by(f64::total_cmp);
        let mut inner_error = 0.0;
        let outer = adaptive_breaks(
            |th: f64| {
                let r = radial([th.cos(), th.sin()]);
                inner_error += r.error;
                r.value
            },
            &angle_breaks,
            Tolerance::new(floor, controls.tol).with_max_intervals(controls.max_intervals),
        );
        let evaluated = (outer.evals.max(1)) as f64;
        Integral {
            value: 2.0 * outer.value,
            error: 2.0 * (outer.error + PI * inner_error / evaluated),
            evals: outer.evals,
        }
    };
    if !total.value.is_finite() {
        return Err(Error::Unresolved(format!(
            "non-finite operator value at {x:?} for {expr}"
        )));
    }
    let flagged = total.error > (controls.tol * 100.0 * total.value.abs()).max(100.0 * floor);
    Ok(PointValue {
        value: total.value,
        error: total.error,
        flagged,
    })
}
