use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::params::Params;

/// Region `Ω` where the solution is unknown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl Domain {
    pub fn contains(&self, x: &[f64]) -> bool {
        const EPS: f64 = 1e-12;
        match self {
            Domain::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum();
                d2.sqrt() <= radius * (1.0 + EPS)
            }
            Domain::Box { lower, upper } => {
                x.iter().zip(lower.iter().zip(upper)).all(|(v, (a, b))| {
                    *v >= a - EPS * a.abs().max(1.0) && *v <= b + EPS * b.abs().max(1.0)
                })
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            Domain::Ball { center, .. } => center.len(),
            Domain::Box { lower, .. } => lower.len(),
        }
    }

    /// Lebesgue measure of the continuum region.
    pub fn measure(&self) -> f64 {
        match self {
            Domain::Ball { radius, center } => {
                if center.len() == 1 {
                    2.0 * radius
                } else {
                    std::f64::consts::PI * radius * radius
                }
            }
            Domain::Box { lower, upper } => lower.iter().zip(upper).map(|(a, b)| b - a).product(),
        }
    }
}

/// Minimum number of grid layers between `Ω` and the edge of the grid box.
pub const MIN_LAYERS: i64 = 2;

/// Nonlocal Dirichlet problem `(-Δ_p)^s u = f` in `Ω`, `u = g` outside `Ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletProblem {
    pub params: Params,
    pub domain: Domain,
    /// Exterior datum on the whole grid, with its far field beyond the box.
    pub exterior: GridFunction,
    /// Source term; only values on `Ω` are used.
    pub source: GridFunction,
}

impl DirichletProblem {
    pub fn new(
        params: Params,
        domain: Domain,
        exterior: GridFunction,
        source: GridFunction,
    ) -> Result<Self> {
        let problem = DirichletProblem {
            params,
            domain,
            exterior,
            source,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn grid(&self) -> &Grid {
        self.exterior.grid()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.params.require_grid_dim()?;
        let grid = self.grid();
        if grid.dim() != self.params.dim || self.domain.dim() != self.params.dim {
            return Err(invalid(
                "grid, domain and parameters disagree on the dimension",
            ));
        }
        if self.source.grid() != grid {
            return Err(invalid("source and exterior datum live on different grids"));
        }
        self.exterior
            .far_field()
            .check_integrable(self.params.s, self.params.p)?;
        let nodes = self.omega_nodes();
        if nodes.is_empty() {
            return Err(invalid("the domain contains no grid nodes"));
        }
        let n = grid.nodes_per_axis() as i64;
        for &flat in &nodes {
            let idx = grid.multi_index(flat);
            for a in 0..grid.dim() {
                if idx[a] < MIN_LAYERS || idx[a] > n - 1 - MIN_LAYERS {
                    return Err(Error::Hypothesis(format!(
                        "domain node {:?} is within {MIN_LAYERS} cells of the grid edge",
                        grid.point(idx)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Flat indices of the grid nodes in `Ω`, in increasing order.
    pub fn omega_nodes(&self) -> Vec<usize> {
        let grid = self.grid();
        (0..grid.len())
            .filter(|&f| self.domain.contains(&grid.node(f)))
            .collect()
    }
}
