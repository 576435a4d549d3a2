//! Two-factor commodity futures models.
//!
//! * [`models`]: the Schwartz-Smith log-price model and the degree-2
//!   polynomial diffusion model with its generator matrix.
//! * [`filters`]: linear, extended and unscented Kalman filters with the
//!   prediction-error log-likelihood.
//! * [`simulation`]: synthetic state paths and constant-tenor futures panels.
//! * [`estimation`]: multistart maximum likelihood under the four
//!   parameter-fixing regimes, RMSE and parameter-recovery reports.
//! * [`linalg_expm`]: seven matrix-exponential algorithms and their benchmark.

pub mod estimation;
pub mod filters;
pub mod linalg_expm;
pub mod models;
pub mod rng;
pub mod simulation;

/// Fixed-precision float formatting for every CSV the crate writes:
/// 17 significant digits, so values round-trip exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}
