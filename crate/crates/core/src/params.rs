//! Parameter sets `(N, s, p, q)`, the duality map `J_p` and the regularity exponent.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// Below this magnitude a real is treated as an exact zero in power maps.
pub const ZERO_FLOOR: f64 = 1e-300;

/// Integrability exponent of the source term; `Infinite` stands for `q = ∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Integrability {
    Finite(f64),
    Infinite,
}

impl Integrability {
    /// `N/q`, with `N/∞ = 0`.
    pub fn dim_ratio(self, dim: usize) -> f64 {
        match self {
            Integrability::Finite(q) => dim as f64 / q,
            Integrability::Infinite => 0.0,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Integrability::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Integrability::Finite(q) => Some(q),
            Integrability::Infinite => None,
        }
    }

    /// The exponent as a real, `∞` mapped to `f64::INFINITY`.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Integrability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Integrability::Finite(q) => write!(f, "{q}"),
            Integrability::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Integrability {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Integrability::Infinite),
            other => {
                let q: f64 = other
                    .parse()
                    .map_err(|_| invalid(format!("cannot parse exponent `{s}`")))?;
                if q.is_infinite() && q > 0.0 {
                    Ok(Integrability::Infinite)
                } else if q.is_finite() && q >= 1.0 {
                    Ok(Integrability::Finite(q))
                } else {
                    Err(invalid(format!(
                        "integrability exponent must be >= 1, got {s}"
                    )))
                }
            }
        }
    }
}

impl Serialize for Integrability {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Integrability::Finite(q) => serializer.serialize_f64(*q),
            Integrability::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Integrability {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(q) => Integrability::from_str(&q.to_string()),
            Raw::Text(s) => Integrability::from_str(&s),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// A validated parameter set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(rename = "N")]
    pub dim: usize,
    pub s: f64,
    pub p: f64,
    pub q: Integrability,
}

impl Params {
    /// Checks `N >= 1`, `0 < s < 1`, `p >= 2`, `q >= 1`.
    pub fn new(dim: usize, s: f64, p: f64, q: Integrability) -> Result<Self> {
        let params = Params { dim, s, p, q };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("dimension N must be >= 1"));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(invalid(format!("s must lie in (0,1), got {}", self.s)));
        }
        if !(self.p >= 2.0 && self.p.is_finite()) {
            return Err(invalid(format!("p must be >= 2, got {}", self.p)));
        }
        if let Integrability::Finite(q) = self.q {
            if !(q >= 1.0 && q.is_finite()) {
                return Err(invalid(format!("q must be >= 1, got {q}")));
            }
        }
        Ok(())
    }

    /// `sp`.
    pub fn sp(&self) -> f64 {
        self.s * self.p
    }

    /// Parameters restricted to dimensions with grid support.
    pub fn require_grid_dim(&self) -> Result<()> {
        if self.dim == 1 || self.dim == 2 {
            Ok(())
        } else {
            Err(invalid(format!(
                "grids support N in {{1,2}}, got N = {}",
                self.dim
            )))
        }
    }
}

/// `J_p(t) = |t|^{p-2} t`, with `J_p(0) = 0`.
#[inline]
pub fn jp(t: f64, p: f64) -> f64 {
    if t.abs() < ZERO_FLOOR {
        0.0
    } else if p == 2.0 {
        t
    } else {
        t.abs().powf(p - 2.0) * t
    }
}

/// Signed power `|t|^e t`, with zero below [`ZERO_FLOOR`].
#[inline]
pub fn signed_pow(t: f64, e: f64) -> f64 {
    if t.abs() < ZERO_FLOOR {
        0.0
    } else if e == 0.0 {
        t
    } else {
        t.abs().powf(e) * t
    }
}

/// `|t|^e` with `|0|^e = 0` for `e > 0` and `1` for `e = 0`.
#[inline]
pub fn abs_pow(t: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if t.abs() < ZERO_FLOOR {
        0.0
    } else {
        t.abs().powf(e)
    }
}

/// `Θ(N,s,p,q) = min{(sp - N/q)/(p-1), 1}`.
///
/// Rejects `q <= N/(sp)` when `sp <= N`.
pub fn theta_exponent(params: &Params) -> Result<f64> {
    params.validate()?;
    let sp = params.sp();
    let n = params.dim as f64;
    if let Integrability::Finite(q) = params.q {
        if sp <= n && q <= n / sp {
            return Err(invalid(format!(
                "q = {q} must exceed N/(sp) = {} when sp <= N",
                n / sp
            )));
        }
    }
    let raw = (sp - params.q.dim_ratio(params.dim)) / (params.p - 1.0);
    Ok(raw.min(1.0))
}

/// `min{sp/(p-1), 1}`, the exponent with no source term.
pub fn theta_homogeneous(s: f64, p: f64) -> f64 {
    (s * p / (p - 1.0)).min(1.0)
}

/// Position of a parameter set relative to the cap `Θ = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `sp - N/q < p - 1`: the exponent is strictly below one.
    AlmostSharp,
    /// `sp - N/q = p - 1`: the cap is reached exactly.
    CappedBoundary,
    /// `sp - N/q > p - 1`: the exponent is truncated to one.
    Capped,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::AlmostSharp => "almost_sharp",
            Regime::CappedBoundary => "capped_boundary",
            Regime::Capped => "capped",
        })
    }
}

pub fn regime(params: &Params) -> Result<Regime> {
    theta_exponent(params)?;
    let lead = params.sp() - params.q.dim_ratio(params.dim);
    let cap = params.p - 1.0;
    let tol = 1e-12 * cap.max(1.0);
    Ok(if (lead - cap).abs() <= tol {
        Regime::CappedBoundary
    } else if lead < cap {
        Regime::AlmostSharp
    } else {
        Regime::Capped
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(dim: usize, s: f64, p: f64, q: Integrability) -> Params {
        Params::new(dim, s, p, q).unwrap()
    }

    #[test]
    fn theta_reference_rows() {
        let a = params(2, 0.5, 2.0, Integrability::Infinite);
        assert_eq!(theta_exponent(&a).unwrap(), 1.0);
        assert_eq!(regime(&a).unwrap(), Regime::CappedBoundary);

        let b = params(2, 0.25, 3.0, Integrability::Finite(4.0));
        assert_eq!(theta_exponent(&b).unwrap(), 0.125);
        assert_eq!(regime(&b).unwrap(), Regime::AlmostSharp);

        let c = params(3, 0.4, 3.0, Integrability::Infinite);
        assert!((theta_exponent(&c).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn theta_rejects_low_integrability() {
        let a = params(2, 0.25, 3.0, Integrability::Finite(2.0));
        assert!(theta_exponent(&a).is_err());
        let edge = params(2, 0.5, 2.0, Integrability::Finite(2.0));
        assert!(theta_exponent(&edge).is_err());
    }

    #[test]
    fn jp_basics() {
        assert_eq!(jp(0.0, 3.0), 0.0);
        assert_eq!(jp(-2.0, 3.0), -4.0);
        assert_eq!(jp(1.5, 2.0), 1.5);
        assert_eq!(jp(1e-320, 2.5), 0.0);
    }

    #[test]
    fn integrability_parsing_and_serde() {
        assert_eq!(
            "inf".parse::<Integrability>().unwrap(),
            Integrability::Infinite
        );
        assert_eq!(
            "4".parse::<Integrability>().unwrap(),
            Integrability::Finite(4.0)
        );
        assert!("0.5".parse::<Integrability>().is_err());
        let json = serde_json::to_string(&Integrability::Infinite).unwrap();
        assert_eq!(json, "\"inf\"");
        let back: Integrability = serde_json::from_str("4.0").unwrap();
        assert_eq!(back, Integrability::Finite(4.0));
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(1, 0.0, 2.0, Integrability::Infinite).is_err());
        assert!(Params::new(1, 0.5, 1.5, Integrability::Infinite).is_err());
        assert!(Params::new(0, 0.5, 2.0, Integrability::Infinite).is_err());
    }
}
