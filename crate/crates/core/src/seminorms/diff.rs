use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};

/// Region of a grid over which norms are taken.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Window {
    /// Every grid node.
    Full,
    /// Nodes in the closed box `[lower, upper]`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Nodes in the closed ball of `radius` about `center`.
    Ball { center: Vec<f64>, radius: f64 },
}

/// Window nodes with quadrature weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowNodes {
    pub nodes: Vec<usize>,
    pub weights: Vec<f64>,
}

fn axis_range(grid: &Grid, axis: usize, lo: f64, hi: f64) -> Option<(i64, i64)> {
    let n = grid.nodes_per_axis() as i64;
    let first = (0..n).find(|&i| grid.coord(axis, i) >= lo - 1e-12 * grid.spacing(axis))?;
    let last = (0..n)
        .rev()
        .find(|&i| grid.coord(axis, i) <= hi + 1e-12 * grid.spacing(axis))?;
    (first <= last).then_some((first, last))
}

impl Window {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Window::Box { lower, upper }
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Window::Ball { center, radius }
    }

    /// Nodes of the window; box windows carry trapezoid weights, ball windows cell volumes.
    pub fn resolve(&self, grid: &Grid) -> Result<WindowNodes> {
        let dim = grid.dim();
        let (lower, upper) = match self {
            Window::Full => (grid.lower().to_vec(), grid.upper().to_vec()),
            Window::Box { lower, upper } => {
                if lower.len() != dim || upper.len() != dim {
                    return Err(invalid("window dimension differs from grid dimension"));
                }
                (lower.clone(), upper.clone())
            }
            Window::Ball { center, radius } => {
                if center.len() != dim {
                    return Err(invalid("window dimension differs from grid dimension"));
                }
                let vol = grid.cell_volume();
                let mut out = WindowNodes {
                    nodes: Vec::new(),
                    weights: Vec::new(),
                };
                for flat in 0..grid.len() {
                    let x = grid.node(flat);
                    let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum();
                    if d2.sqrt() <= radius * (1.0 + 1e-12) {
                        out.nodes.push(flat);
                        out.weights.push(vol);
                    }
                }
                if out.nodes.is_empty() {
                    return Err(Error::Unresolved("ball window contains no nodes".into()));
                }
                return Ok(out);
            }
        };
        let mut ranges = [(0i64, 0i64); 2];
        for a in 0..dim {
            ranges[a] = axis_range(grid, a, lower[a], upper[a])
                .ok_or_else(|| Error::Unresolved("box window contains no nodes".into()))?;
        }
        let axis_weight = |a: usize, i: i64| -> f64 {
            let (lo, hi) = ranges[a];
            let h = grid.spacing(a);
            if lo == hi {
                h
            } else if i == lo || i == hi {
                0.5 * h
            } else {
                h
            }
        };
        let mut out = WindowNodes {
            nodes: Vec::new(),
            weights: Vec::new(),
        };
        let (lo1, hi1) = if dim == 2 { ranges[1] } else { (0, 0) };
        for i1 in lo1..=hi1 {
            for i0 in ranges[0].0..=ranges[0].1 {
                let flat = grid.flat_index([i0, i1]).expect("inside grid");
                let w1 = if dim == 2 { axis_weight(1, i1) } else { 1.0 };
                out.nodes.push(flat);
                out.weights.push(axis_weight(0, i0) * w1);
            }
        }
        Ok(out)
    }
}

/// Lattice shift `h = k ∘ spacing`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shift(pub Vec<i64>);

impl Shift {
    pub fn along(dim: usize, axis: usize, cells: i64) -> Self {
        let mut v = vec![0; dim];
        v[axis] = cells;
        Shift(v)
    }

    pub fn length(&self, grid: &Grid) -> f64 {
        self.0
            .iter()
            .enumerate()
            .map(|(a, k)| (*k as f64 * grid.spacing(a)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn padded(&self) -> [i64; 2] {
        [
            self.0.first().copied().unwrap_or(0),
            self.0.get(1).copied().unwrap_or(0),
        ]
    }
}

/// Shifts of `2^k` cells along each axis for `k < levels`.
pub fn dyadic_shifts(dim: usize, levels: u32) -> Vec<Shift> {
    let mut out = Vec::new();
    for k in 0..levels {
        for axis in 0..dim {
            out.push(Shift::along(dim, axis, 1 << k));
        }
    }
    out
}

/// Differences on the window nodes, in window order.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSample {
    pub window: WindowNodes,
    pub values: Vec<f64>,
}

fn shifted(u: &GridFunction, idx: [i64; 2], k: [i64; 2], times: i64) -> Result<f64> {
    u.lattice_value([idx[0] + times * k[0], idx[1] + times * k[1]])
        .map_err(|e| match e {
            Error::FarFieldGap { .. } => Error::Coverage(format!(
                "shift {k:?} x{times} from node {idx:?} leaves the box and the far-field range"
            )),
            other => other,
        })
}

/// `δ_h u = u(x+h) - u(x)` (order 1) or `δ²_h u = u(x+2h) + u(x) - 2u(x+h)` (order 2).
pub fn delta(u: &GridFunction, shift: &Shift, order: u8, window: &Window) -> Result<WindowSample> {
    let grid = u.grid();
    if shift.0.len() != grid.dim() {
        return Err(invalid("shift dimension differs from grid dimension"));
    }
    let nodes = window.resolve(grid)?;
    let k = shift.padded();
    let mut values = Vec::with_capacity(nodes.nodes.len());
    for &flat in &nodes.nodes {
        let idx = grid.multi_index(flat);
        let u0 = u.values()[flat];
        let v = match order {
            1 => shifted(u, idx, k, 1)? - u0,
            2 => shifted(u, idx, k, 2)? + u0 - 2.0 * shifted(u, idx, k, 1)?,
            _ => return Err(invalid("difference order must be 1 or 2")),
        };
        values.push(v);
    }
    Ok(WindowSample {
        window: nodes,
        values,
    })
}

impl WindowSample {
    /// Weighted `L^q` norm; `q = ∞` gives the maximum modulus.
    pub fn lq_norm(&self, q: f64) -> f64 {
        if q.is_infinite() {
            return self.values.iter().fold(0.0, |m, v| m.max(v.abs()));
        }
        let s: f64 = self
            .values
            .iter()
            .zip(&self.window.weights)
            .map(|(v, w)| w * v.abs().powf(q))
            .sum();
        s.powf(1.0 / q)
    }
}
