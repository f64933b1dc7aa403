//! Uniform tensor grids in one or two dimensions and grid functions with far-field models.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::expr::Expr;

/// A uniform tensor grid on the box `[lower, upper]` with `nodes` points per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    nodes: usize,
}

impl Grid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, nodes: usize) -> Result<Self> {
        let dim = lower.len();
        if dim == 0 || dim > 2 || upper.len() != dim {
            return Err(invalid("grid bounds must both have length 1 or 2"));
        }
        if nodes < 2 {
            return Err(invalid("a grid needs at least 2 nodes per axis"));
        }
        for (a, b) in lower.iter().zip(&upper) {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(invalid(format!("degenerate grid axis [{a}, {b}]")));
            }
        }
        Ok(Grid {
            lower,
            upper,
            nodes,
        })
    }

    /// The cube `[-half, half]^dim`.
    pub fn symmetric(dim: usize, half: f64, nodes: usize) -> Result<Self> {
        Grid::new(vec![-half; dim], vec![half; dim], nodes)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.nodes - 1) as f64
    }

    /// Volume of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    /// Lattice coordinate along an axis; indices outside `0..nodes` extend the lattice.
    #[inline]
    pub fn coord(&self, axis: usize, index: i64) -> f64 {
        self.lower[axis] + index as f64 * self.spacing(axis)
    }

    /// Multi-index of a flat index (axis 0 fastest).
    pub fn multi_index(&self, flat: usize) -> [i64; 2] {
        if self.dim() == 1 {
            [flat as i64, 0]
        } else {
            [(flat % self.nodes) as i64, (flat / self.nodes) as i64]
        }
    }

    pub fn flat_index(&self, idx: [i64; 2]) -> Option<usize> {
        let n = self.nodes as i64;
        let in0 = (0..n).contains(&idx[0]);
        if self.dim() == 1 {
            in0.then_some(idx[0] as usize)
        } else {
            (in0 && (0..n).contains(&idx[1])).then(|| (idx[0] + n * idx[1]) as usize)
        }
    }

    /// Coordinates of a lattice point.
    pub fn point(&self, idx: [i64; 2]) -> Vec<f64> {
        (0..self.dim()).map(|a| self.coord(a, idx[a])).collect()
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.point(self.multi_index(flat))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    /// Radius of the smallest origin-centred ball containing the box.
    pub fn outer_radius(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| a.abs().max(b.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn same_layout(&self, other: &Grid) -> bool {
        self == other
    }
}

/// Model of a function outside its grid box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FarFieldModel {
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude * |x|^exponent`.
    PowerLaw {
        amplitude: f64,
        exponent: f64,
    },
    ClosedForm {
        expr: Expr,
    },
}

/// Far-field model together with the radius beyond which it is trusted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarField {
    pub model: FarFieldModel,
    #[serde(default)]
    pub valid_radius: f64,
}

impl FarField {
    pub fn zero() -> Self {
        FarField {
            model: FarFieldModel::Zero,
            valid_radius: 0.0,
        }
    }

    pub fn constant(value: f64) -> Self {
        FarField {
            model: FarFieldModel::Constant { value },
            valid_radius: 0.0,
        }
    }

    pub fn power_law(amplitude: f64, exponent: f64, valid_radius: f64) -> Self {
        FarField {
            model: FarFieldModel::PowerLaw {
                amplitude,
                exponent,
            },
            valid_radius,
        }
    }

    pub fn closed_form(expr: Expr) -> Self {
        FarField {
            model: FarFieldModel::ClosedForm { expr },
            valid_radius: 0.0,
        }
    }

    /// Growth exponent at infinity.
    pub fn growth(&self) -> f64 {
        match &self.model {
            FarFieldModel::Zero | FarFieldModel::Constant { .. } => 0.0,
            FarFieldModel::PowerLaw { exponent, .. } => exponent.max(0.0),
            FarFieldModel::ClosedForm { expr } => expr.growth(),
        }
    }

    /// Value of the model, ignoring the validity radius.
    pub fn model_value(&self, x: &[f64]) -> f64 {
        match &self.model {
            FarFieldModel::Zero => 0.0,
            FarFieldModel::Constant { value } => *value,
            FarFieldModel::PowerLaw {
                amplitude,
                exponent,
            } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                amplitude * r.powf(*exponent)
            }
            FarFieldModel::ClosedForm { expr } => expr.eval(x),
        }
    }

    /// Checks that the tail of `(-Δ_p)^s` is absolutely integrable: `γ(p-1) < sp`.
    pub fn check_integrable(&self, s: f64, p: f64) -> Result<()> {
        let g = self.growth();
        if g * (p - 1.0) >= s * p {
            Err(Error::NonIntegrable(format!(
                "growth gamma(p-1) = {} >= sp = {}",
                g * (p - 1.0),
                s * p
            )))
        } else {
            Ok(())
        }
    }
}

/// Nodal values on a grid with a far-field model outside the box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    far_field: FarField,
    /// Nodes whose value came from a symmetric limit.
    #[serde(default)]
    flagged: Vec<usize>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>, far_field: FarField) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "expected {} nodal values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite value at node {i}")));
        }
        Ok(GridFunction {
            grid,
            values,
            far_field,
            flagged: Vec::new(),
        })
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        let n = grid.len();
        GridFunction {
            grid,
            values: vec![value; n],
            far_field: FarField::constant(value),
            flagged: Vec::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn far_field(&self) -> &FarField {
        &self.far_field
    }

    pub fn flagged(&self) -> &[usize] {
        &self.flagged
    }

    pub fn with_far_field(mut self, far_field: FarField) -> Self {
        self.far_field = far_field;
        self
    }

    /// Pointwise map of the nodal values; the far field becomes zero.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| f(*v)).collect(),
            far_field: FarField::zero(),
            flagged: Vec::new(),
        }
    }

    /// Value at a lattice point, in the box or via the far field.
    pub fn lattice_value(&self, idx: [i64; 2]) -> Result<f64> {
        match self.grid.flat_index(idx) {
            Some(flat) => Ok(self.values[flat]),
            None => self.far_value(&self.grid.point(idx)),
        }
    }

    fn far_value(&self, x: &[f64]) -> Result<f64> {
        if matches!(self.far_field.model, FarFieldModel::ClosedForm { .. }) {
            return Ok(self.far_field.model_value(x));
        }
        let radius = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if radius + 1e-12 * radius.max(1.0) < self.far_field.valid_radius {
            return Err(Error::FarFieldGap {
                radius,
                valid_radius: self.far_field.valid_radius,
            });
        }
        Ok(self.far_field.model_value(x))
    }

    /// Multilinear interpolation inside the box, far-field model outside.
    ///
    /// Exact at nodes.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let g = &self.grid;
        if x.len() != g.dim() {
            return Err(invalid(format!(
                "point has dimension {}, grid has {}",
                x.len(),
                g.dim()
            )));
        }
        if !g.contains(x) {
            return self.far_value(x);
        }
        let n = g.nodes as i64;
        let mut base = [0i64; 2];
        let mut frac = [0.0f64; 2];
        for a in 0..g.dim() {
            let h = g.spacing(a);
            let t = (x[a] - g.lower[a]) / h;
            let near = t.round() as i64;
            if (0..n).contains(&near) && g.coord(a, near) == x[a] {
                base[a] = near.min(n - 2);
                frac[a] = if near == n - 1 { 1.0 } else { 0.0 };
            } else {
                let i = (t.floor() as i64).clamp(0, n - 2);
                base[a] = i;
                frac[a] = ((x[a] - g.coord(a, i)) / h).clamp(0.0, 1.0);
            }
        }
        if g.dim() == 1 {
            let i = base[0] as usize;
            let t = frac[0];
            if t == 0.0 {
                return Ok(self.values[i]);
            }
            if t == 1.0 {
                return Ok(self.values[i + 1]);
            }
            return Ok(self.values[i] * (1.0 - t) + self.values[i + 1] * t);
        }
        let mut acc = 0.0;
        for (d1, w1) in [(0i64, 1.0 - frac[1]), (1, frac[1])] {
            for (d0, w0) in [(0i64, 1.0 - frac[0]), (1, frac[0])] {
                let w = w0 * w1;
                if w != 0.0 {
                    let flat = g.flat_index([base[0] + d0, base[1] + d1]).expect("in box");
                    acc += w * self.values[flat];
                }
            }
        }
        Ok(acc)
    }

    /// Largest mismatch between boundary nodes and the far-field model, where the model is trusted.
    pub fn far_field_mismatch(&self) -> f64 {
        let g = &self.grid;
        let n = g.nodes as i64;
        let mut worst: f64 = 0.0;
        for flat in 0..g.len() {
            let idx = g.multi_index(flat);
            let on_edge = (0..g.dim()).any(|a| idx[a] == 0 || idx[a] == n - 1);
            if !on_edge {
                continue;
            }
            let x = g.point(idx);
            if let Ok(v) = self.far_value(&x) {
                worst = worst.max((v - self.values[flat]).abs());
            }
        }
        worst
    }
}

/// Samples `expr` at the grid nodes.
///
/// Nodes where the expression is not finite take the symmetric limit along the axes when
/// that limit is finite and are flagged; otherwise the sample is rejected.
pub fn sample_closed_form(expr: &Expr, grid: &Grid, far_field: FarField) -> Result<GridFunction> {
    let mut values = Vec::with_capacity(grid.len());
    let mut flagged = Vec::new();
    for flat in 0..grid.len() {
        let x = grid.node(flat);
        let v = expr.eval(&x);
        if v.is_finite() {
            values.push(v);
            continue;
        }
        let mut limits = Vec::new();
        for eta in [1e-6, 1e-8] {
            let mut sum = 0.0;
            let mut count = 0.0;
            for a in 0..grid.dim() {
                let step = eta * grid.spacing(a);
                for sign in [-1.0, 1.0] {
                    let mut y = x.clone();
                    y[a] += sign * step;
                    sum += expr.eval(&y);
                    count += 1.0;
                }
            }
            limits.push(sum / count);
        }
        let (a, b) = (limits[0], limits[1]);
        if a.is_finite() && b.is_finite() && (a - b).abs() <= 1e-6 * a.abs().max(1.0) {
            values.push(b);
            flagged.push(flat);
        } else {
            return Err(Error::Singular(format!(
                "{expr} has no finite symmetric limit at {x:?}"
            )));
        }
    }
    let mut out = GridFunction::new(grid.clone(), values, far_field)?;
    out.flagged = flagged;
    Ok(out)
}

/// Samples `expr` on the grid and uses it as its own far field.
pub fn sample_exact(expr: &Expr, grid: &Grid) -> Result<GridFunction> {
    sample_closed_form(expr, grid, FarField::closed_form(expr.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_reproduce_values() {
        let grid = Grid::symmetric(1, 1.0, 257).unwrap();
        let e: Expr = "power:0.5".parse().unwrap();
        let u = sample_closed_form(&e, &grid, FarField::zero()).unwrap();
        for flat in 0..grid.len() {
            let x = grid.node(flat);
            assert_eq!(u.evaluate(&x).unwrap(), u.values()[flat]);
        }
        let mid = u.evaluate(&[0.5]).unwrap();
        assert_eq!(mid, 0.5f64.sqrt());
    }

    #[test]
    fn two_dim_interpolation_is_bilinear() {
        let grid = Grid::symmetric(2, 1.0, 9).unwrap();
        let e: Expr = "affine:1:2:-3".parse().unwrap();
        let u = sample_closed_form(&e, &grid, FarField::zero()).unwrap();
        let v = u.evaluate(&[0.123, -0.456]).unwrap();
        assert!((v - e.eval(&[0.123, -0.456])).abs() < 1e-13);
        for flat in 0..grid.len() {
            assert_eq!(u.evaluate(&grid.node(flat)).unwrap(), u.values()[flat]);
        }
    }

    #[test]
    fn far_field_gap_is_an_error() {
        let grid = Grid::symmetric(1, 1.0, 17).unwrap();
        let u = GridFunction::new(grid, vec![0.0; 17], FarField::power_law(1.0, 0.5, 2.0)).unwrap();
        assert!(matches!(u.evaluate(&[1.5]), Err(Error::FarFieldGap { .. })));
        assert!((u.evaluate(&[4.0]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_samples() {
        let grid = Grid::symmetric(1, 1.0, 9).unwrap();
        let bad: Expr = "power:-0.4".parse().unwrap();
        assert!(matches!(
            sample_closed_form(&bad, &grid, FarField::zero()),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn integrability_of_far_fields() {
        assert!(FarField::power_law(1.0, 0.5, 1.0)
            .check_integrable(0.6, 2.0)
            .is_ok());
        assert!(FarField::power_law(1.0, 1.3, 1.0)
            .check_integrable(0.6, 2.0)
            .is_err());
    }
}
