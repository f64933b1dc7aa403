//! Registry of closed-form functions addressed by string ids such as `power:0.5`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::params::{abs_pow, theta_exponent, Integrability, Params};

/// Registered ids with a one-line description, in documentation order.
pub const REGISTRY: &[(&str, &str)] = &[
    ("const:c", "constant c"),
    ("power:gamma[:amp[:c0[:c1]]]", "amp * |x - c|^gamma"),
    ("affine:c0:m0[:m1]", "c0 + m . x"),
    ("square", "|x|^2"),
    ("bump:w[:c0[:c1]]", "exp(-|x - c|^2 / w^2)"),
    ("sine:k", "sin(k x_0)"),
    (
        "sharpness:N:s:p:q:eps",
        "|x|^(Theta + eps), the sharpness profile",
    ),
    (
        "riesz3d",
        "closed form of the Riesz potential of the unit ball in R^3",
    ),
];

/// A closed-form function of `x ∈ R^N`.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Constant(f64),
    Power {
        gamma: f64,
        amplitude: f64,
        center: Vec<f64>,
    },
    Affine {
        offset: f64,
        slope: Vec<f64>,
    },
    Square,
    Bump {
        width: f64,
        center: Vec<f64>,
    },
    Sine {
        frequency: f64,
    },
    SharpProfile {
        dim: usize,
        s: f64,
        p: f64,
        q: f64,
        eps: f64,
        gamma: f64,
    },
    Riesz3d,
}

fn coord(v: &[f64], i: usize) -> f64 {
    v.get(i).copied().unwrap_or(0.0)
}

fn dist(x: &[f64], c: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .fold(0.0, |acc: f64, (i, xi)| acc.hypot(xi - coord(c, i)))
}

/// `∫_{|y|<1} |x-y|^{-2} dy` in `R^3` as a function of `a = |x|`.
pub fn riesz3d_closed_form(a: f64) -> f64 {
    use std::f64::consts::PI;
    if a < 1e-8 {
        return 4.0 * PI * (1.0 - a * a / 3.0);
    }
    if (a - 1.0).abs() < 1e-15 {
        return 2.0 * PI;
    }
    2.0 * PI + PI * (1.0 - a * a) / a * ((1.0 + a) / (1.0 - a)).abs().ln()
}

impl Expr {
    /// Builds the sharpness profile `|x|^{Θ+ε}` after checking its hypotheses.
    pub fn sharpness(dim: usize, s: f64, p: f64, q: f64, eps: f64) -> Result<Self> {
        let params = Params::new(dim, s, p, Integrability::Finite(q))?;
        let theta = theta_exponent(&params)?;
        Ok(Expr::SharpProfile {
            dim,
            s,
            p,
            q,
            eps,
            gamma: theta + eps,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Constant(c) => *c,
            Expr::Power {
                gamma,
                amplitude,
                center,
            } => {
                let r = dist(x, center);
                if r == 0.0 {
                    if *gamma > 0.0 {
                        0.0
                    } else if *gamma == 0.0 {
                        *amplitude
                    } else {
                        f64::INFINITY
                    }
                } else {
                    amplitude * r.powf(*gamma)
                }
            }
            Expr::Affine { offset, slope } => {
                offset
                    + x.iter()
                        .enumerate()
                        .map(|(i, xi)| coord(slope, i) * xi)
                        .sum::<f64>()
            }
            Expr::Square => x.iter().map(|v| v * v).sum(),
            Expr::Bump { width, center } => {
                let r = dist(x, center);
                (-(r * r) / (width * width)).exp()
            }
            Expr::Sine { frequency } => (frequency * coord(x, 0)).sin(),
            Expr::SharpProfile { gamma, .. } => abs_pow(dist(x, &[]), *gamma),
            Expr::Riesz3d => riesz3d_closed_form(dist(x, &[])),
        }
    }

    /// Exponent `γ` with `|f(x)| = O(|x|^γ)` at infinity.
    pub fn growth(&self) -> f64 {
        match self {
            Expr::Constant(_) | Expr::Bump { .. } | Expr::Sine { .. } | Expr::Riesz3d => 0.0,
            Expr::Power { gamma, .. } => gamma.max(0.0),
            Expr::Affine { slope, .. } => {
                if slope.iter().all(|m| *m == 0.0) {
                    0.0
                } else {
                    1.0
                }
            }
            Expr::Square => 2.0,
            Expr::SharpProfile { gamma, .. } => *gamma,
        }
    }

    /// A point where the function fails to be smooth, used as a quadrature breakpoint.
    pub fn singular_point(&self) -> Option<Vec<f64>> {
        match self {
            Expr::Power { gamma, center, .. } if gamma.fract() != 0.0 || *gamma < 0.0 => {
                Some(center.clone())
            }
            Expr::SharpProfile { .. } => Some(vec![0.0, 0.0, 0.0]),
            Expr::Riesz3d => Some(vec![0.0, 0.0, 0.0]),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Constant(_) => true,
            Expr::Power {
                amplitude, gamma, ..
            } => *amplitude == 0.0 || *gamma == 0.0,
            Expr::Affine { slope, .. } => slope.iter().all(|m| *m == 0.0),
            _ => false,
        }
    }
}

fn parse_num(field: &str, id: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::UnknownExpr(format!("{id} (bad number `{field}`)")))
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(id: &str) -> Result<Self> {
        let mut parts = id.trim().split(':');
        let name = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let nums = || -> Result<Vec<f64>> { args.iter().map(|a| parse_num(a, id)).collect() };
        let arity = |lo: usize, hi: usize| -> Result<()> {
            if args.len() < lo || args.len() > hi {
                Err(Error::UnknownExpr(format!(
                    "{id} (expects {lo}..={hi} arguments)"
                )))
            } else {
                Ok(())
            }
        };
        match name {
            "const" => {
                arity(1, 1)?;
                Ok(Expr::Constant(nums()?[0]))
            }
            "power" => {
                arity(1, 4)?;
                let v = nums()?;
                Ok(Expr::Power {
                    gamma: v[0],
                    amplitude: v.get(1).copied().unwrap_or(1.0),
                    center: v.get(2..).map(<[f64]>::to_vec).unwrap_or_default(),
                })
            }
            "affine" => {
                arity(2, 3)?;
                let v = nums()?;
                Ok(Expr::Affine {
                    offset: v[0],
                    slope: v[1..].to_vec(),
                })
            }
            "square" => {
                arity(0, 0)?;
                Ok(Expr::Square)
            }
            "bump" => {
                arity(1, 3)?;
                let v = nums()?;
                if v[0] <= 0.0 {
                    return Err(invalid(format!("{id}: width must be positive")));
                }
                Ok(Expr::Bump {
                    width: v[0],
                    center: v[1..].to_vec(),
                })
            }
            "sine" => {
                arity(1, 1)?;
                Ok(Expr::Sine {
                    frequency: nums()?[0],
                })
            }
            "sharpness" => {
                arity(5, 5)?;
                let v = nums()?;
                if v[0].fract() != 0.0 || v[0] < 1.0 {
                    return Err(invalid(format!("{id}: N must be a positive integer")));
                }
                Expr::sharpness(v[0] as usize, v[1], v[2], v[3], v[4])
            }
            "riesz3d" => {
                arity(0, 0)?;
                Ok(Expr::Riesz3d)
            }
            _ => Err(Error::UnknownExpr(id.to_string())),
        }
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!(":{x}")).collect()
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Constant(c) => write!(f, "const:{c}"),
            Expr::Power {
                gamma,
                amplitude,
                center,
            } => {
                if center.is_empty() && *amplitude == 1.0 {
                    write!(f, "power:{gamma}")
                } else {
                    write!(f, "power:{gamma}:{amplitude}{}", join(center))
                }
            }
            Expr::Affine { offset, slope } => write!(f, "affine:{offset}{}", join(slope)),
            Expr::Square => f.write_str("square"),
            Expr::Bump { width, center } => write!(f, "bump:{width}{}", join(center)),
            Expr::Sine { frequency } => write!(f, "sine:{frequency}"),
            Expr::SharpProfile {
                dim, s, p, q, eps, ..
            } => write!(f, "sharpness:{dim}:{s}:{p}:{q}:{eps}"),
            Expr::Riesz3d => f.write_str("riesz3d"),
        }
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let id = String::deserialize(deserializer)?;
        id.parse().map_err(serde::de::Error::custom)
    }
}
