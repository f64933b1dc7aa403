//! Numerical laboratory for the fractional p-Laplacian
//! `(-Δ_p)^s u(x) = 2 PV ∫ |u(x)-u(y)|^{p-2}(u(x)-u(y)) |x-y|^{-N-sp} dy`.
//!
//! The crate is organised bottom-up:
//!
//! * [`params`], [`grid`], [`expr`]: parameter sets, tensor grids with far-field
//!   models, and the closed-form expression registry.
//! * [`quadrature`]: operator application on grids and at points, nonlocal tails.
//! * [`seminorms`]: difference operators, fractional seminorms, exponent fitting.
//! * [`solver`]: nonlocal Dirichlet problems by energy minimisation.
//! * [`inequalities`]: pointwise algebraic inequalities and their constants.
//! * [`experiments`]: scenario drivers producing CSV/JSON reports.

pub mod error;
pub mod experiments;
pub mod expr;
pub mod grid;
pub mod inequalities;
pub mod params;
pub mod quad;
pub mod quadrature;
pub mod report;
pub mod seminorms;
pub mod solver;

pub use error::{Error, Result};
pub use expr::Expr;
pub use grid::{FarField, Grid, GridFunction};
pub use params::{jp, theta_exponent, Integrability, Params};
