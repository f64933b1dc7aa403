use crate::error::{invalid, Result};
use crate::grid::{Grid, GridFunction};
use crate::params::Params;
use crate::quad::FixedRule;

/// Lattice weights `W_k = |k h|^{-N-sp} · cell volume` for offsets `0 < |k|_∞ <= reach`.
///
/// Weights depend only on `|k|` per axis, so one table serves every node.
#[derive(Clone, Debug)]
pub struct KernelTable {
    params: Params,
    grid: Grid,
    reach: usize,
    weights: Vec<f64>,
}

impl KernelTable {
    /// Table reaching across the whole box from any node.
    pub fn new(grid: &Grid, params: &Params) -> Result<Self> {
        Self::with_reach(grid, params, grid.nodes_per_axis() - 1)
    }

    pub fn with_reach(grid: &Grid, params: &Params, reach: usize) -> Result<Self> {
        params.validate()?;
        if params.dim != grid.dim() {
            return Err(invalid(format!(
                "parameter dimension {} differs from grid dimension {}",
                params.dim,
                grid.dim()
            )));
        }
        if reach == 0 {
            return Err(invalid("kernel reach must be positive"));
        }
        let dim = grid.dim();
        let exponent = dim as f64 + params.sp();
        let vol = grid.cell_volume();
        let h0 = grid.spacing(0);
        let h1 = if dim == 2 { grid.spacing(1) } else { 0.0 };
        let side = reach + 1;
        let rows = if dim == 2 { side } else { 1 };
        let mut weights = vec![0.0; side * rows];
        for k1 in 0..rows {
            for k0 in 0..side {
                if k0 == 0 && k1 == 0 {
                    continue;
                }
                let d = ((k0 as f64 * h0).powi(2) + (k1 as f64 * h1).powi(2)).sqrt();
                weights[k0 + side * k1] = d.powf(-exponent) * vol;
            }
        }
        Ok(KernelTable {
            params: *params,
            grid: grid.clone(),
            reach,
            weights,
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn reach(&self) -> usize {
        self.reach
    }

    /// Weight for an offset; `None` on the diagonal or beyond the reach.
    pub fn weight(&self, offset: &[i64]) -> Option<f64> {
        let a0 = offset.first().copied().unwrap_or(0).unsigned_abs() as usize;
        let a1 = offset.get(1).copied().unwrap_or(0).unsigned_abs() as usize;
        if (a0 == 0 && a1 == 0) || a0 > self.reach || a1 > self.reach {
            return None;
        }
        if self.grid.dim() == 1 && a1 != 0 {
            return None;
        }
        Some(self.abs_weight(a0, a1))
    }

    #[inline]
    pub(crate) fn abs_weight(&self, a0: usize, a1: usize) -> f64 {
        self.weights[a0 + (self.reach + 1) * a1]
    }

    /// Offsets with their weights, diagonal excluded.
    pub(crate) fn offsets(&self) -> Vec<([i64; 2], f64)> {
        let r = self.reach as i64;
        let r1 = if self.grid.dim() == 2 { r } else { 0 };
        let mut out = Vec::new();
        for k1 in -r1..=r1 {
            for k0 in -r..=r {
                if k0 == 0 && k1 == 0 {
                    continue;
                }
                out.push((
                    [k0, k1],
                    self.abs_weight(k0.unsigned_abs() as usize, k1.unsigned_abs() as usize),
                ));
            }
        }
        out
    }

    /// Half-widths of the box around a node covered by the lattice sum.
    pub fn cover_half_widths(&self) -> [f64; 2] {
        let w = self.reach as f64 + 0.5;
        let h1 = if self.grid.dim() == 2 {
            self.grid.spacing(1)
        } else {
            0.0
        };
        [w * self.grid.spacing(0), w * h1]
    }
}

/// Quadrature for `∫_{outside cover box} φ(z) |z|^{-N-sp} dz` with fixed nodes `z_t`.
///
/// The radial variable is mapped by `r = ρ τ^{-1/κ}` with `κ = sp - γ(p-1)`, so functions
/// growing like `|z|^γ` produce a bounded integrand on `τ ∈ (0, 1]`.
#[derive(Clone, Debug)]
pub struct TailRule {
    pub offsets: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

const TAIL_LEVELS: usize = 8;
const TAIL_ORDER: usize = 6;
const ANGLE_ORDER: usize = 10;

impl TailRule {
    pub fn new(table: &KernelTable, growth: f64) -> Result<Self> {
        let params = table.params();
        let sp = params.sp();
        let kappa = sp - growth * (params.p - 1.0);
        if kappa <= 0.0 {
            return Err(crate::Error::NonIntegrable(format!(
                "growth gamma(p-1) = {} >= sp = {sp}",
                growth * (params.p - 1.0)
            )));
        }
        let radial = FixedRule::graded_unit(TAIL_LEVELS, TAIL_ORDER);
        let [h0, h1] = table.cover_half_widths();
        let mut rule = TailRule {
            offsets: Vec::new(),
            weights: Vec::new(),
        };
        let mut ray = |dir: [f64; 2], rho: f64, w_angle: f64| {
            for (tau, wt) in radial.nodes.iter().zip(&radial.weights) {
                let r = rho * tau.powf(-1.0 / kappa);
                let w = w_angle * wt * rho.powf(-sp) / kappa * tau.powf(sp / kappa - 1.0);
                rule.offsets.push([r * dir[0], r * dir[1]]);
                rule.weights.push(w);
            }
        };
        if table.grid().dim() == 1 {
            ray([1.0, 0.0], h0, 1.0);
            ray([-1.0, 0.0], h0, 1.0);
        } else {
            let corner = h1.atan2(h0);
            let right = FixedRule::gauss(ANGLE_ORDER, -corner, corner);
            let top = FixedRule::gauss(ANGLE_ORDER, corner, std::f64::consts::PI - corner);
            for flip in [0.0, std::f64::consts::PI] {
                for (th, w) in right.nodes.iter().zip(&right.weights) {
                    let th = th + flip;
                    ray([th.cos(), th.sin()], h0 / th.cos().abs(), *w);
                }
                for (th, w) in top.nodes.iter().zip(&top.weights) {
                    let th = th + flip;
                    ray([th.cos(), th.sin()], h1 / th.sin().abs(), *w);
                }
            }
        }
        Ok(rule)
    }

    /// `Σ w_t`, the kernel mass outside the cover box.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Values of a grid function on the lattice extended by `reach` nodes on each side.
#[derive(Clone, Debug)]
pub(crate) struct Extension {
    pub values: Vec<f64>,
    pub side: usize,
    pub reach: usize,
    pub dim: usize,
}

impl Extension {
    pub fn new(u: &GridFunction, reach: usize) -> Result<Self> {
        let g = u.grid();
        let dim = g.dim();
        let n = g.nodes_per_axis();
        let side = n + 2 * reach;
        let r = reach as i64;
        let mut values = Vec::with_capacity(side.pow(dim as u32));
        let rows = if dim == 2 { side } else { 1 };
        for e1 in 0..rows {
            for e0 in 0..side {
                let i0 = e0 as i64 - r;
                let i1 = if dim == 2 { e1 as i64 - r } else { 0 };
                values.push(u.lattice_value([i0, i1])?);
            }
        }
        Ok(Extension {
            values,
            side,
            reach,
            dim,
        })
    }

    /// Flat position of grid node `idx` shifted by `offset`.
    #[inline]
    pub fn at(&self, idx: [i64; 2], offset: [i64; 2]) -> usize {
        let r = self.reach as i64;
        let e0 = idx[0] + offset[0] + r;
        if self.dim == 1 {
            e0 as usize
        } else {
            let e1 = idx[1] + offset[1] + r;
            (e0 + self.side as i64 * e1) as usize
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Integrability;

    #[test]
    fn tail_mass_matches_closed_form_in_1d() {
        let grid = Grid::symmetric(1, 1.0, 33).unwrap();
        let params = Params::new(1, 0.4, 2.5, Integrability::Infinite).unwrap();
        let table = KernelTable::new(&grid, &params).unwrap();
        let rule = TailRule::new(&table, 0.0).unwrap();
        let h = table.cover_half_widths()[0];
        let exact = 2.0 * h.powf(-params.sp()) / params.sp();
        assert!((rule.mass() - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn tail_mass_in_2d() {
        let grid = Grid::symmetric(2, 1.0, 9).unwrap();
        let params = Params::new(2, 0.5, 2.0, Integrability::Infinite).unwrap();
        let table = KernelTable::new(&grid, &params).unwrap();
        let rule = TailRule::new(&table, 0.0).unwrap();
        let [h0, _] = table.cover_half_widths();
        // ∫ over the exterior of the square [-H,H]^2 of |z|^{-2-sp}.
        let exact = crate::quad::adaptive(
            |th: f64| (h0 / th.cos()).powf(-1.0) / 1.0,
            -std::f64::consts::FRAC_PI_4,
            std::f64::consts::FRAC_PI_4,
            crate::quad::Tolerance::new(1e-14, 1e-14),
        )
        .value
            * 4.0
            / params.sp();
        assert!(
            (rule.mass() - exact).abs() < 1e-9 * exact,
            "{} vs {exact}",
            rule.mass()
        );
    }

    #[test]
    fn weights_are_symmetric_and_positive() {
        let grid = Grid::symmetric(2, 1.0, 7).unwrap();
        let params = Params::new(2, 0.3, 3.0, Integrability::Infinite).unwrap();
        let t = KernelTable::new(&grid, &params).unwrap();
        assert!(t.weight(&[0, 0]).is_none());
        for (k, w) in t.offsets() {
            assert!(w > 0.0 && w.is_finite());
            assert_eq!(Some(w), t.weight(&[-k[0], -k[1]]));
            assert_eq!(Some(w), t.weight(&[k[1], k[0]]));
        }
    }

    #[test]
    fn growth_beyond_threshold_is_rejected() {
        let grid = Grid::symmetric(1, 1.0, 9).unwrap();
        let params = Params::new(1, 0.5, 2.0, Integrability::Infinite).unwrap();
        let t = KernelTable::new(&grid, &params).unwrap();
        assert!(TailRule::new(&t, 1.0).is_err());
    }
}
