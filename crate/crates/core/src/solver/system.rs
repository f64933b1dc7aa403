use nalgebra::DMatrix;
use rayon::prelude::*;

use super::problem::DirichletProblem;
use crate::error::Result;
use crate::grid::Grid;
use crate::params::jp;
use crate::quadrature::{Extension, KernelTable, TailRule};

const NOT_UNKNOWN: u32 = u32::MAX;

/// `|a + d|^p - |a|^p` without cancellation when `|d| ≪ |a|`.
#[inline]
pub(crate) fn pow_change(a: f64, d: f64, p: f64) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    if a == 0.0 {
        return d.abs().powf(p);
    }
    if p == 2.0 {
        return d * (2.0 * a + d);
    }
    let r = d / a;
    if r.abs() < 0.5 {
        a.abs().powf(p) * (p * r.ln_1p()).exp_m1()
    } else {
        (a + d).abs().powf(p) - a.abs().powf(p)
    }
}

/// Discretised energy of a Dirichlet problem on the grid lattice.
///
/// Unknowns are the values on `Ω` nodes; every other lattice point carries the exterior
/// datum, and the region beyond the lattice reach is covered by a [`TailRule`].
pub(crate) struct System {
    pub p: f64,
    pub cell: f64,
    pub grid: Grid,
    pub omega: Vec<usize>,
    ext: Extension,
    base: Vec<usize>,
    unknown_at: Vec<u32>,
    offsets: Vec<(i64, f64)>,
    tail_w: Vec<f64>,
    tail_g: Vec<f64>,
    pub g_omega: Vec<f64>,
    pub f_omega: Vec<f64>,
    /// `Σ_k W_k + Σ_t w_t`, the discrete kernel mass seen from any node.
    pub kernel_mass: f64,
}

impl System {
    pub fn new(problem: &DirichletProblem) -> Result<Self> {
        problem.validate()?;
        let grid = problem.grid().clone();
        let table = KernelTable::new(&grid, &problem.params)?;
        let g = &problem.exterior;
        let rule = TailRule::new(&table, g.far_field().growth())?;
        let ext = Extension::new(g, table.reach())?;
        let omega = problem.omega_nodes();
        let mut unknown_at = vec![NOT_UNKNOWN; ext.values.len()];
        let mut base = Vec::with_capacity(omega.len());
        for (m, &flat) in omega.iter().enumerate() {
            let pos = ext.at(grid.multi_index(flat), [0, 0]);
            unknown_at[pos] = m as u32;
            base.push(pos);
        }
        let side = ext.side as i64;
        let offsets: Vec<(i64, f64)> = table
            .offsets()
            .into_iter()
            .map(|(k, w)| (k[0] + side * k[1], w))
            .collect();
        let t = rule.weights.len();
        let mut tail_g = Vec::with_capacity(omega.len() * t);
        for &flat in &omega {
            let x = grid.node(flat);
            for z in &rule.offsets {
                let y: Vec<f64> = x.iter().zip(z).map(|(a, b)| a + b).collect();
                tail_g.push(g.evaluate(&y)?);
            }
        }
        let kernel_mass = offsets.iter().map(|o| o.1).sum::<f64>() + rule.mass();
        Ok(System {
            p: problem.params.p,
            cell: grid.cell_volume(),
            g_omega: omega.iter().map(|&f| g.values()[f]).collect(),
            f_omega: omega.iter().map(|&f| problem.source.values()[f]).collect(),
            grid,
            omega,
            ext,
            base,
            unknown_at,
            offsets,
            tail_w: rule.weights,
            tail_g,
            kernel_mass,
        })
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    fn tail_slice(&self, m: usize) -> &[f64] {
        let t = self.tail_w.len();
        &self.tail_g[m * t..(m + 1) * t]
    }

    /// Visits every lattice neighbour of unknown `m` as `(value, weight, unknown index)`.
    #[inline]
    fn for_neighbours(&self, v: &[f64], m: usize, mut visit: impl FnMut(f64, f64, Option<usize>)) {
        let b = self.base[m] as i64;
        for &(delta, w) in &self.offsets {
            let pos = (b + delta) as usize;
            let u = self.unknown_at[pos];
            if u == NOT_UNKNOWN {
                visit(self.ext.values[pos], w, None);
            } else {
                visit(v[u as usize], w, Some(u as usize));
            }
        }
    }

    /// `(-Δ_p)^s` applied to the state, at the `Ω` nodes.
    pub fn operator(&self, v: &[f64]) -> Vec<f64> {
        let p = self.p;
        (0..self.len())
            .into_par_iter()
            .map(|m| {
                let vm = v[m];
                let mut acc = 0.0;
                self.for_neighbours(v, m, |vj, w, _| acc += jp(vm - vj, p) * w);
                for (w, gt) in self.tail_w.iter().zip(self.tail_slice(m)) {
                    acc += w * jp(vm - gt, p);
                }
                2.0 * acc
            })
            .collect()
    }

    /// Strong-form residual `(-Δ_p)^s v - f` on `Ω`.
    pub fn residual(&self, v: &[f64]) -> Vec<f64> {
        self.operator(v)
            .into_iter()
            .zip(&self.f_omega)
            .map(|(l, f)| l - f)
            .collect()
    }

    /// Energy gradient, `cell volume × residual`.
    pub fn gradient(&self, v: &[f64]) -> Vec<f64> {
        self.residual(v)
            .into_iter()
            .map(|r| r * self.cell)
            .collect()
    }

    /// Energy normalised to vanish on exterior-only interactions at `v = g`.
    pub fn energy(&self, v: &[f64]) -> f64 {
        let p = self.p;
        let rows: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|m| {
                let vm = v[m];
                let gm = self.g_omega[m];
                let mut inner = 0.0;
                let mut outer = 0.0;
                self.for_neighbours(v, m, |vj, w, u| match u {
                    Some(_) => inner += (vm - vj).abs().powf(p) * w,
                    None => outer += pow_change(gm - vj, vm - gm, p) * w,
                });
                for (w, gt) in self.tail_w.iter().zip(self.tail_slice(m)) {
                    outer += w * pow_change(gm - gt, vm - gm, p);
                }
                inner / p + 2.0 * outer / p - self.f_omega[m] * vm
            })
            .collect();
        self.cell * rows.iter().sum::<f64>()
    }

    /// `E(v + t d) - E(v)` summed from per-term changes.
    pub fn energy_change(&self, v: &[f64], d: &[f64], t: f64) -> f64 {
        let p = self.p;
        let rows: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|m| {
                let vm = v[m];
                let dm = t * d[m];
                let mut inner = 0.0;
                let mut outer = 0.0;
                self.for_neighbours(v, m, |vj, w, u| match u {
                    Some(j) => inner += pow_change(vm - vj, dm - t * d[j], p) * w,
                    None => outer += pow_change(vm - vj, dm, p) * w,
                });
                for (w, gt) in self.tail_w.iter().zip(self.tail_slice(m)) {
                    outer += w * pow_change(vm - gt, dm, p);
                }
                inner / p + 2.0 * outer / p - self.f_omega[m] * dm
            })
            .collect();
        self.cell * rows.iter().sum::<f64>()
    }

    /// Hessian with `|t|^{p-2}` replaced by `(t² + ε²)^{(p-2)/2}`; exact when `p = 2` or `ε = 0`.
    pub fn hessian(&self, v: &[f64], eps: f64) -> DMatrix<f64> {
        let n = self.len();
        let p = self.p;
        let scale = 2.0 * (p - 1.0) * self.cell;
        let weight = |t: f64| -> f64 {
            if p == 2.0 {
                1.0
            } else {
                (t * t + eps * eps).powf(0.5 * (p - 2.0))
            }
        };
        let rows: Vec<(f64, Vec<(usize, f64)>)> = (0..n)
            .into_par_iter()
            .map(|m| {
                let vm = v[m];
                let mut diag = 0.0;
                let mut off = Vec::new();
                self.for_neighbours(v, m, |vj, w, u| {
                    let c = weight(vm - vj) * w;
                    diag += c;
                    if let Some(j) = u {
                        off.push((j, -c));
                    }
                });
                for (w, gt) in self.tail_w.iter().zip(self.tail_slice(m)) {
                    diag += w * weight(vm - gt);
                }
                (diag, off)
            })
            .collect();
        let mut h = DMatrix::zeros(n, n);
        for (m, (diag, off)) in rows.into_iter().enumerate() {
            h[(m, m)] = scale * diag;
            for (j, c) in off {
                h[(m, j)] = scale * c;
            }
        }
        h
    }

    /// Diagonal of the `p = 2` Hessian, used to scale gradient steps.
    pub fn jacobi_scale(&self) -> f64 {
        2.0 * self.cell * self.kernel_mass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_change_matches_direct_difference() {
        for &(a, d, p) in &[
            (1.0f64, 1e-3f64, 3.0f64),
            (-2.0, 0.5, 2.5),
            (0.3, -0.9, 4.0),
            (1.0, 1e-4, 2.0),
            (0.0, 0.2, 3.0),
        ] {
            let direct: f64 = (a + d).abs().powf(p) - a.abs().powf(p);
            let stable = pow_change(a, d, p);
            assert!(
                (direct - stable).abs() <= 1e-9 * direct.abs().max(1e-300),
                "{a} {d} {p}"
            );
        }
        let tiny = pow_change(1.0, 1e-12, 3.0);
        assert!((tiny - 3e-12).abs() <= 1e-22);
    }
}
