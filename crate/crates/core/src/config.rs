//! Fixed tolerances and test thresholds.
//!
//! Every statistical threshold used by the verification machinery is a named
//! constant here so that reports stay auditable and re-runnable.

/// Grid of frequencies used for characteristic-function comparisons.
///
/// Brackets both the small-frequency regime that pins the stability index and
/// the tail of the characteristic function.
pub const THETA_GRID: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// Rejection level for hypothesis tests (two-sample KS, chi-square).
pub const TEST_LEVEL: f64 = 0.01;

/// Width of Monte Carlo acceptance bands, in standard errors.
pub const MC_BAND_SE: f64 = 3.0;

/// Tolerance for identities that are exact up to floating-point rounding.
pub const EXACT_REL_TOL: f64 = 1e-10;

/// Absolute tolerance for the one-dimensional adaptive quadratures.
pub const QUAD_ABS_TOL: f64 = 1e-8;

/// Relative tolerance target for the oscillatory tail integrals.
pub const QUAD_REL_TOL: f64 = 1e-9;

/// Default tensor-product Gauss order for per-cell averages.
pub const CELL_QUAD_ORDER: usize = 5;

/// Fraction of the alpha-norm mass a truncated lattice window may drop.
pub const TRUNC_EPS: f64 = 1e-4;

/// Significant digits written to CSV output (full f64 precision).
pub const CSV_DIGITS: usize = 17;
