use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::problem::DirichletProblem;
use super::system::System;
use crate::error::{invalid, Result};
use crate::grid::GridFunction;

/// Descent direction used by the solver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Regularised Newton steps, falling back to scaled gradient steps.
    #[default]
    Newton,
    /// Scaled gradient steps only.
    GradientDescent,
}

/// Starting state of the iteration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Initial {
    /// The exterior datum restricted to `Ω`.
    #[default]
    Exterior,
    Zero,
    /// Explicit values on `Ω` nodes, in increasing flat-index order.
    Values {
        values: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// Target for `sup_Ω |(-Δ_p)^s u - f|`.
    pub tol: f64,
    pub max_iter: usize,
    pub method: Method,
    pub initial: Initial,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iter: 200,
            method: Method::Newton,
            initial: Initial::Exterior,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_initial(mut self, initial: Initial) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

/// Outcome of a Dirichlet solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Solution on the grid: computed values on `Ω`, the exterior datum elsewhere.
    pub u: GridFunction,
    pub residual_sup: f64,
    /// Energy after each accepted step, starting from the initial state.
    pub energy_trace: Vec<f64>,
    pub residual_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub method: Method,
    pub tol: f64,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Backtracking on the energy; returns the accepted step and its energy change.
fn line_search(sys: &System, v: &[f64], d: &[f64], slope: f64) -> Option<(f64, f64)> {
    if slope.is_nan() || slope >= 0.0 {
        return None;
    }
    let mut t = 1.0;
    for _ in 0..MAX_HALVINGS {
        let change = sys.energy_change(v, d, t);
        if change <= ARMIJO * t * slope && change <= 0.0 {
            return Some((t, change));
        }
        t *= 0.5;
    }
    None
}

fn newton_direction(sys: &System, v: &[f64], grad: &[f64], residual: f64) -> Option<Vec<f64>> {
    let eps = if sys.p == 2.0 {
        0.0
    } else {
        (residual / (2.0 * sys.kernel_mass)).powf(1.0 / (sys.p - 1.0))
    };
    let h: DMatrix<f64> = sys.hessian(v, eps);
    let chol = h.cholesky()?;
    let rhs = DVector::from_iterator(grad.len(), grad.iter().map(|g| -g));
    let d = chol.solve(&rhs);
    d.iter()
        .all(|x| x.is_finite())
        .then(|| d.iter().copied().collect())
}

/// Minimises the discrete energy of `problem` and reports the result.
///
/// Every accepted step lowers the energy; the run counts as converged only when the
/// residual sup-norm reaches `opts.tol`.
pub fn solve_dirichlet(problem: &DirichletProblem, opts: &SolveOptions) -> Result<SolveReport> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(invalid("solver tolerance must be positive"));
    }
    let sys = System::new(problem)?;
    let n = sys.len();
    let mut v = match &opts.initial {
        Initial::Exterior => sys.g_omega.clone(),
        Initial::Zero => vec![0.0; n],
        Initial::Values { values } => {
            if values.len() != n {
                return Err(invalid(format!(
                    "initial state has {} values, domain has {n}",
                    values.len()
                )));
            }
            values.clone()
        }
    };
    let mut energy = sys.energy(&v);
    let mut energy_trace = vec![energy];
    let mut residual = sys.residual(&v);
    let mut res_sup = sup_norm(&residual);
    let mut residual_trace = vec![res_sup];
    let mut iterations = 0;
    while res_sup > opts.tol && iterations < opts.max_iter {
        let grad: Vec<f64> = residual.iter().map(|r| r * sys.cell).collect();
        let scaled: Vec<f64> = grad.iter().map(|g| -g / sys.jacobi_scale()).collect();
        let mut step = None;
        if opts.method == Method::Newton {
            if let Some(d) = newton_direction(&sys, &v, &grad, res_sup) {
                let slope: f64 = d.iter().zip(&grad).map(|(a, b)| a * b).sum();
                step = line_search(&sys, &v, &d, slope).map(|s| (d, s));
            }
        }
        if step.is_none() {
            let slope: f64 = scaled.iter().zip(&grad).map(|(a, b)| a * b).sum();
            step = line_search(&sys, &v, &scaled, slope).map(|s| (scaled, s));
        }
        let Some((d, (t, change))) = step else {
            break;
        };
        for (vi, di) in v.iter_mut().zip(&d) {
            *vi += t * di;
        }
        energy += change;
        energy_trace.push(energy);
        residual = sys.residual(&v);
        res_sup = sup_norm(&residual);
        residual_trace.push(res_sup);
        iterations += 1;
    }
    let mut values = problem.exterior.values().to_vec();
    for (m, &flat) in sys.omega.iter().enumerate() {
        values[flat] = v[m];
    }
    let u = GridFunction::new(
        sys.grid.clone(),
        values,
        problem.exterior.far_field().clone(),
    )?;
    Ok(SolveReport {
        u,
        residual_sup: res_sup,
        energy_trace,
        residual_trace,
        iterations,
        converged: res_sup <= opts.tol,
        method: opts.method,
        tol: opts.tol,
    })
}

/// Discrete energy of a state on `Ω`, normalised to vanish for exterior-only interactions.
pub fn discrete_energy(values: &[f64], problem: &DirichletProblem) -> Result<f64> {
    let sys = System::new(problem)?;
    check_len(values, sys.len())?;
    Ok(sys.energy(values))
}

/// Exact gradient of [`discrete_energy`].
pub fn energy_gradient(values: &[f64], problem: &DirichletProblem) -> Result<Vec<f64>> {
    let sys = System::new(problem)?;
    check_len(values, sys.len())?;
    Ok(sys.gradient(values))
}

/// `(-Δ_p)^s v - f` on the `Ω` nodes.
pub fn residual(values: &[f64], problem: &DirichletProblem) -> Result<Vec<f64>> {
    let sys = System::new(problem)?;
    check_len(values, sys.len())?;
    Ok(sys.residual(values))
}

fn check_len(values: &[f64], n: usize) -> Result<()> {
    if values.len() != n {
        return Err(invalid(format!(
            "expected {n} domain values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("state contains non-finite values"));
    }
    Ok(())
}
