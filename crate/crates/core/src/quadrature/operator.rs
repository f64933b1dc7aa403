use rayon::prelude::*;

use super::kernel::{Extension, KernelTable, TailRule};
use crate::error::{invalid, Result};
use crate::grid::{FarField, GridFunction};
use crate::params::jp;

/// Lattice evaluation of `(-Δ_p)^s u` at every grid node.
///
/// The lattice sum runs over all offsets within the table reach, using far-field values at
/// lattice points outside the box; the remaining exterior is covered by a [`TailRule`].
pub fn apply_operator_grid(u: &GridFunction, table: &KernelTable) -> Result<GridFunction> {
    if u.grid() != table.grid() {
        return Err(invalid(
            "grid function and kernel table use different grids",
        ));
    }
    let params = table.params();
    u.far_field().check_integrable(params.s, params.p)?;
    let rule = TailRule::new(table, u.far_field().growth())?;
    let ext = Extension::new(u, table.reach())?;
    let grid = u.grid();
    let offsets = table.offsets();
    let p = params.p;

    let values: Result<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let idx = grid.multi_index(flat);
            let ui = u.values()[flat];
            let lattice = lattice_sum(&ext, &offsets, idx, ui, p);
            let x = grid.point(idx);
            let mut tail = 0.0;
            for (z, w) in rule.offsets.iter().zip(&rule.weights) {
                let y: Vec<f64> = x.iter().zip(z).map(|(a, b)| a + b).collect();
                tail += w * jp(ui - u.evaluate(&y)?, p);
            }
            Ok(2.0 * (lattice + tail))
        })
        .collect();
    GridFunction::new(grid.clone(), values?, FarField::zero())
}

fn lattice_sum(
    ext: &Extension,
    offsets: &[([i64; 2], f64)],
    idx: [i64; 2],
    ui: f64,
    p: f64,
) -> f64 {
    let base = ext.at(idx, [0, 0]) as i64;
    let side = ext.side as i64;
    let mut acc = 0.0;
    if p == 2.0 {
        for (k, w) in offsets {
            let v = ext.values[(base + k[0] + side * k[1]) as usize];
            acc += (ui - v) * w;
        }
    } else {
        for (k, w) in offsets {
            let v = ext.values[(base + k[0] + side * k[1]) as usize];
            acc += jp(ui - v, p) * w;
        }
    }
    acc
}
