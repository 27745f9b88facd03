//! Pinned tolerances shared by the experiments and the test suites.

/// Closed-form integrals against aligned-grid midpoint sums.
pub const EXACT_EQUIV: f64 = 1e-12;

/// Slack for the triangle inequality on exactly integrable functions.
pub const TRIANGLE_SLACK: f64 = 1e-12;

/// Ball-average quadrature.
pub const BALL_QUAD: f64 = 1e-3;

/// Formula-versus-empirical comparisons, before propagated quadrature error.
pub const OPNORM_ABS: f64 = 1e-6;

/// Quadrature budget for the Hardy sharpness sweep.
pub const HARDY_QUAD: f64 = 1e-8;

/// The sharpness ratio must exceed this by the last sweep point.
pub const HARDY_THRESHOLD: f64 = 1.9;

/// Bracket width at which the inner infimum of the starred oscillation stops.
pub const CMO_TERNARY: f64 = 1e-10;

/// Default truncation tolerance for discrete operator sums.
pub const OPERATOR_TOL: f64 = 1e-12;

/// Ball-norm candidates of the staircase never exceed this (for `p = 1`).
pub const STAIRCASE_BALL_BOUND: f64 = 6.0;
