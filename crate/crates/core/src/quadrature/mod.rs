//! Evaluation of `(-Δ_p)^s` on grids and at points, and nonlocal tails.

mod kernel;
mod operator;
mod pointwise;
mod tail;

pub(crate) use kernel::Extension;
pub use kernel::{KernelTable, TailRule};
pub use operator::apply_operator_grid;
pub use pointwise::{apply_operator_point, PointValue, QuadControls};
pub use tail::{
    ball_integral, ball_sup, tail, tail_power_law, tail_q_power, unit_sphere_measure,
    verify_tail_lemmas, Bound, ClosedField, Field, TailLemmaConfig, TailLemmaReport,
};
