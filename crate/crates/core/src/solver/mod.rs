//! Nonlocal Dirichlet problems solved by minimising the discrete energy.

mod descent;
mod diagnostics;
mod problem;
mod system;

pub use descent::{
    discrete_energy, energy_gradient, residual, solve_dirichlet, Initial, Method, SolveOptions,
    SolveReport,
};
pub use diagnostics::{
    comparison_diagnostic, comparison_sweep, fractional_energy, harmonic_replacement,
    local_bound_diagnostic, source_term, ComparisonReport, ComparisonSweep, LocalBoundReport,
};
pub use problem::{DirichletProblem, Domain, MIN_LAYERS};
