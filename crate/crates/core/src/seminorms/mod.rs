//! Difference operators, fractional seminorms and local exponent fits on grids.

mod diff;
pub(crate) mod fit;
mod ladder;
mod norms;

pub use diff::{delta, dyadic_shifts, Shift, Window, WindowNodes, WindowSample};
pub use fit::{
    fit_holder_exponent, linear_fit, loglog_fit, ExponentFit, LinearFit, RegularityReport,
    ScaleRow, SeminormRow,
};
pub use ladder::{
    decimal_rational, ladder_identity_holds, ladder_report, theta_closed_form, theta_ladder,
    theta_ladder_exact, LadderReport, LadderRow, Rung, LADDER_GROWTH_LIMIT,
};
pub use norms::{
    ball_lq_norm, ball_mean_power, ball_measure, besov_seminorm, campanato_excess, holder_seminorm,
    nikolskii_seminorm, oscillation, slobodeckii_seminorm, SlobodeckiiValue,
};
