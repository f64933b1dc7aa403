//! Report envelopes and file writers shared by the scenario runner and the CLI.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `crate-version (git-describe)`.
pub fn tool_version() -> String {
    format!(
        "{} ({})",
        env!("CARGO_PKG_VERSION"),
        env!("FRACP_GIT_DESCRIBE")
    )
}

/// One asserted quantity with its target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: String,
    pub pass: bool,
}

impl Check {
    pub fn within(name: &str, value: f64, expected: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            value,
            target: format!("{expected} ± {tol}"),
            pass: (value - expected).abs() <= tol,
        }
    }

    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            target: format!("<= {bound}"),
            pass: value <= bound,
        }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            target: format!(">= {bound}"),
            pass: value >= bound,
        }
    }

    pub fn above(name: &str, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            target: format!("> {bound}"),
            pass: value > bound,
        }
    }

    pub fn holds(name: &str, pass: bool) -> Self {
        Check {
            name: name.into(),
            value: if pass { 1.0 } else { 0.0 },
            target: "true".into(),
            pass,
        }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

/// Top-level JSON document: tool version, resolved config, checks and the payload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<C, B> {
    pub tool: String,
    pub version: String,
    pub config: C,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub report: B,
}

impl<C, B> Envelope<C, B> {
    pub fn new(config: C, checks: Vec<Check>, report: B) -> Self {
        Envelope {
            tool: "fracp".into(),
            version: tool_version(),
            config,
            passed: all_pass(&checks),
            checks,
            report,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes serialisable rows as CSV with a header derived from the row type.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    ensure_parent(path)?;
    let file = fs::File::create(path)?;
    write_csv_to(file, rows)
}

pub fn write_csv_to<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Node coordinates and values of a grid function, one row per node.
pub fn write_grid_csv(path: &Path, u: &crate::GridFunction) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    let grid = u.grid();
    let mut header: Vec<String> = (0..grid.dim()).map(|a| format!("x{a}")).collect();
    header.push("u".into());
    w.write_record(&header)?;
    for (flat, v) in u.values().iter().enumerate() {
        let mut rec: Vec<String> = grid.node(flat).iter().map(|x| x.to_string()).collect();
        rec.push(v.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_grid_csv`] back into a grid function with zero far field.
///
/// Rows must list the nodes of a uniform tensor grid with axis 0 varying fastest.
pub fn read_grid_csv(path: &Path) -> Result<crate::GridFunction> {
    let mut r = csv::Reader::from_path(path)?;
    let width = r.headers()?.len();
    if !(2..=3).contains(&width) {
        return Err(invalid(format!("expected 2 or 3 columns, found {width}")));
    }
    let dim = width - 1;
    let mut points = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row: Vec<f64> = rec
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| invalid(format!("bad number `{f}`: {e}")))
            })
            .collect::<Result<_>>()?;
        points.push(row[..dim].to_vec());
        values.push(row[dim]);
    }
    let nodes = (values.len() as f64).powf(1.0 / dim as f64).round() as usize;
    if nodes < 2 || nodes.pow(dim as u32) != values.len() {
        return Err(invalid(format!(
            "{} rows do not form a square tensor grid",
            values.len()
        )));
    }
    let lower: Vec<f64> = (0..dim)
        .map(|a| points.iter().map(|x| x[a]).fold(f64::INFINITY, f64::min))
        .collect();
    let upper: Vec<f64> = (0..dim)
        .map(|a| {
            points
                .iter()
                .map(|x| x[a])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let grid = crate::Grid::new(lower, upper, nodes)?;
    for (flat, x) in points.iter().enumerate() {
        let node = grid.node(flat);
        let tol = 1e-9
            * (0..dim)
                .map(|a| grid.spacing(a))
                .fold(f64::INFINITY, f64::min);
        if node.iter().zip(x).any(|(a, b)| (a - b).abs() > tol) {
            return Err(invalid(format!("row {flat} is not at grid node {node:?}")));
        }
    }
    crate::GridFunction::new(grid, values, crate::FarField::zero())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}
