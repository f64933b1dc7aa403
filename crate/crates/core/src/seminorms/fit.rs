use std::io::Write;

use serde::{Deserialize, Serialize};

use super::diff::{Shift, Window};
use super::norms::{besov_seminorm, campanato_excess, nikolskii_seminorm, oscillation};
use crate::error::{invalid, Result};
use crate::grid::GridFunction;
use crate::params::Integrability;

/// Least-squares line through `(x, y)` pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("a fit needs at least two matching points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("fit abscissae are all equal"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(LinearFit {
        slope,
        intercept,
        residual: (rss / n).sqrt(),
    })
}

/// Slope of `log y` against `log x`.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.iter().chain(ys).any(|v| v.is_nan() || *v <= 0.0) {
        return Err(invalid("log-log fit needs positive data"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

/// Outcome of an exponent fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExponentFit {
    /// The data vanish at every scale.
    Flat,
    Fitted {
        exponent: f64,
        intercept: f64,
        residual: f64,
    },
}

impl ExponentFit {
    pub fn exponent(&self) -> Option<f64> {
        match self {
            ExponentFit::Flat => None,
            ExponentFit::Fitted { exponent, .. } => Some(*exponent),
        }
    }

    fn from_data(radii: &[f64], data: &[f64], flat_floor: f64) -> Result<Self> {
        if data.iter().all(|v| v.abs() <= flat_floor) {
            return Ok(ExponentFit::Flat);
        }
        let fit = loglog_fit(radii, data)?;
        Ok(ExponentFit::Fitted {
            exponent: fit.slope,
            intercept: fit.intercept,
            residual: fit.residual,
        })
    }
}

/// Statistics of one ball in a regularity fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub radius: f64,
    pub oscillation: f64,
    pub excess: f64,
}

/// One seminorm evaluation attached to a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormRow {
    pub kind: String,
    pub beta: f64,
    pub q: Integrability,
    pub value: f64,
}

/// Local regularity of a grid function about a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub center: Vec<f64>,
    pub p: f64,
    /// Slope of `log osc_{B_r} u` against `log r`.
    pub exponent: ExponentFit,
    /// Slope of `log (r^{-N} excess)^{1/p}` against `log r`.
    pub campanato_exponent: ExponentFit,
    /// Slope of `log excess` against `log r`.
    pub excess_slope: ExponentFit,
    pub rows: Vec<ScaleRow>,
    #[serde(default)]
    pub seminorms: Vec<SeminormRow>,
}

impl RegularityReport {
    /// Adds Nikolskii and Besov seminorms for each `(β, q)` over the given shifts.
    pub fn add_seminorms(
        &mut self,
        u: &GridFunction,
        pairs: &[(f64, Integrability)],
        shifts: &[Shift],
        window: &Window,
    ) -> Result<()> {
        for &(beta, q) in pairs {
            self.seminorms.push(SeminormRow {
                kind: "nikolskii".into(),
                beta,
                q,
                value: nikolskii_seminorm(u, beta, q, shifts, window)?,
            });
            self.seminorms.push(SeminormRow {
                kind: "besov2".into(),
                beta,
                q,
                value: besov_seminorm(u, beta, q, shifts, window)?,
            });
        }
        Ok(())
    }

    /// Writes the per-scale table as CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["radius", "oscillation", "excess"])?;
        for row in &self.rows {
            w.write_record([
                format!("{:.17e}", row.radius),
                format!("{:.17e}", row.oscillation),
                format!("{:.17e}", row.excess),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fits local Hölder and Campanato exponents of `u` at `center` from dyadic radii.
pub fn fit_holder_exponent(
    u: &GridFunction,
    center: &[f64],
    radii: &[f64],
    p: f64,
) -> Result<RegularityReport> {
    if radii.len() < 4 {
        return Err(invalid("at least four radii are required"));
    }
    let mut sorted = radii.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    for w in sorted.windows(2) {
        let ratio = w[0] / w[1];
        if !(w[1] > 0.0 && (ratio - 2.0).abs() < 1e-9) {
            return Err(invalid(
                "radii must be positive and dyadic (consecutive ratio 2)",
            ));
        }
    }
    let dim = u.grid().dim() as f64;
    let mut rows = Vec::with_capacity(sorted.len());
    for &r in &sorted {
        rows.push(ScaleRow {
            radius: r,
            oscillation: oscillation(u, center, r)?,
            excess: campanato_excess(u, center, r, p)?,
        });
    }
    let scale = u
        .values()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let floor = 1e-13 * scale;
    let osc: Vec<f64> = rows.iter().map(|r| r.oscillation).collect();
    let exc: Vec<f64> = rows.iter().map(|r| r.excess).collect();
    let normalized: Vec<f64> = rows
        .iter()
        .map(|r| (r.excess * r.radius.powf(-dim)).powf(1.0 / p))
        .collect();
    let excess_floor = floor.powf(p) * sorted[0].powf(dim);
    Ok(RegularityReport {
        center: center.to_vec(),
        p,
        exponent: ExponentFit::from_data(&sorted, &osc, floor)?,
        campanato_exponent: ExponentFit::from_data(&sorted, &normalized, floor)?,
        excess_slope: ExponentFit::from_data(&sorted, &exc, excess_floor)?,
        rows,
        seminorms: Vec::new(),
    })
}
