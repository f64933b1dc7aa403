use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::diff::{Shift, Window};
use super::norms::besov_seminorm;
use crate::error::{invalid, Result};
use crate::grid::GridFunction;
use crate::params::{Integrability, Params};

/// One rung `(β_i, ϑ_i)` of the difference-quotient iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub beta: f64,
    pub theta: f64,
}

impl Rung {
    /// Smoothness `(1 + ϑβ)/β` of the `L^β` quotient.
    pub fn input_exponent(&self) -> f64 {
        (1.0 + self.theta * self.beta) / self.beta
    }

    /// Smoothness `(1 + sp + ϑβ)/(β - 1 + p)` of the improved `L^{β-1+p}` quotient.
    pub fn output_exponent(&self, s: f64, p: f64) -> f64 {
        (1.0 + s * p + self.theta * self.beta) / (self.beta - 1.0 + p)
    }
}

/// `β_0 = p, β_{i+1} = β_i + p - 1`, `ϑ_0 = s - 1/p, ϑ_{i+1} = (ϑ_i β_i + sp)/β_{i+1}`.
pub fn theta_ladder(s: f64, p: f64, steps: usize) -> Vec<Rung> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut rung = Rung {
        beta: p,
        theta: s - 1.0 / p,
    };
    out.push(rung);
    for _ in 0..steps {
        let beta = rung.beta + p - 1.0;
        rung = Rung {
            theta: (rung.theta * rung.beta + s * p) / beta,
            beta,
        };
        out.push(rung);
    }
    out
}

/// Closed form `ϑ_i = ((s - 1/p) p + s p i) / (p + i(p-1))`.
pub fn theta_closed_form(s: f64, p: f64, i: usize) -> f64 {
    let i = i as f64;
    ((s - 1.0 / p) * p + s * p * i) / (p + i * (p - 1.0))
}

/// Exact rational ladder, for checking the recursion identities without rounding.
pub fn theta_ladder_exact(
    s: &BigRational,
    p: &BigRational,
    steps: usize,
) -> Vec<(BigRational, BigRational)> {
    let one = BigRational::one();
    let mut beta = p.clone();
    let mut theta = s - &one / p;
    let mut out = vec![(beta.clone(), theta.clone())];
    for _ in 0..steps {
        let next = &beta + p - &one;
        theta = (&theta * &beta + s * p) / &next;
        beta = next;
        out.push((beta.clone(), theta.clone()));
    }
    out
}

/// Exact check of `(1+sp+ϑ_iβ_i)/(β_i+p-1) = (1+ϑ_{i+1}β_{i+1})/β_{i+1}` along a ladder.
pub fn ladder_identity_holds(s: &BigRational, p: &BigRational, steps: usize) -> bool {
    let one = BigRational::one();
    let ladder = theta_ladder_exact(s, p, steps);
    ladder.windows(2).all(|w| {
        let (b, t) = &w[0];
        let (b1, t1) = &w[1];
        let lhs = (&one + s * p + t * b) / (b + p - &one);
        let rhs = (&one + t1 * b1) / b1;
        !b1.is_zero() && lhs == rhs
    })
}

/// Parses a decimal such as `0.35` into an exact rational.
pub fn decimal_rational(x: f64) -> BigRational {
    let text = format!("{x}");
    let (int, frac) = text.split_once('.').unwrap_or((&text, ""));
    let digits: BigInt = format!("{int}{frac}").parse().expect("decimal digits");
    BigRational::new(digits, BigInt::from(10u32).pow(frac.len() as u32))
}

/// Quotient values of one rung over a shift ladder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub beta: f64,
    pub theta: f64,
    pub input_exponent: f64,
    pub input_value: f64,
    pub output_exponent: f64,
    pub output_value: f64,
    /// Ratio of the supremum over all shifts to the supremum without the shortest ones; 1 at rounding level.
    pub refinement_growth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub rows: Vec<LadderRow>,
    /// Every value finite and no rung grows by more than [`LADDER_GROWTH_LIMIT`] under refinement.
    pub stable: bool,
}

/// Refinement growth above this factor flags a blow-up.
pub const LADDER_GROWTH_LIMIT: f64 = 1.5;

/// Second-difference quotients along the rungs of the ladder.
///
/// Refinement growth compares the full shift set with the set lacking the shortest shifts.
pub fn ladder_report(
    u: &GridFunction,
    params: &Params,
    rungs: &[Rung],
    shifts: &[Shift],
    window: &Window,
) -> Result<LadderReport> {
    let grid = u.grid();
    let finest = shifts
        .iter()
        .map(|k| k.length(grid))
        .fold(f64::INFINITY, f64::min);
    let coarse: Vec<Shift> = shifts
        .iter()
        .filter(|k| k.length(grid) > finest * (1.0 + 1e-9))
        .cloned()
        .collect();
    if coarse.is_empty() {
        return Err(invalid(
            "a ladder report needs shifts of at least two lengths",
        ));
    }
    let (s, p) = (params.s, params.p);
    let coarse = &coarse[..];
    // Quotients of rounding noise carry no growth information.
    let scale = u
        .values()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let noise = 1e-10 * scale * finest.powi(-2);
    let mut rows = Vec::with_capacity(rungs.len());
    let mut stable = true;
    for rung in rungs {
        let ein = rung.input_exponent();
        let eout = rung.output_exponent(s, p);
        let qin = Integrability::Finite(rung.beta);
        let qout = Integrability::Finite(rung.beta - 1.0 + p);
        let vin = besov_seminorm(u, ein, qin, shifts, window)?;
        let vout = besov_seminorm(u, eout, qout, shifts, window)?;
        let cin = besov_seminorm(u, ein, qin, coarse, window)?;
        let cout = besov_seminorm(u, eout, qout, coarse, window)?;
        let growth = |full: f64, part: f64| {
            if full <= noise {
                1.0
            } else if part > 0.0 {
                full / part
            } else {
                f64::INFINITY
            }
        };
        let g = growth(vin, cin).max(growth(vout, cout));
        stable &= vin.is_finite() && vout.is_finite() && g <= LADDER_GROWTH_LIMIT;
        rows.push(LadderRow {
            beta: rung.beta,
            theta: rung.theta,
            input_exponent: ein,
            input_value: vin,
            output_exponent: eout,
            output_value: vout,
            refinement_growth: g,
        });
    }
    Ok(LadderReport { rows, stable })
}
