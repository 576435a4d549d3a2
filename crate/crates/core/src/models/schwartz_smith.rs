//! Schwartz-Smith two-factor log-price model.
//!
//! State: `x_t = c + E x_{t−1} + w_t`, `w_t ~ N(0, Σ_w)` (exact OU step).
//! Measurement: `y_t = d + Fᵀ x_t + v_t` with `y` the log futures prices.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use super::{decay_integral, factor_covariance, ModelError, ModelParams, StateVector};

/// Exact one-step transition over `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSpec {
    pub c: Vector2<f64>,
    /// Diagonal `diag(e^{−κΔt}, e^{−γΔt})`.
    pub e: Matrix2<f64>,
    pub sigma_w: Matrix2<f64>,
}

/// Log-futures measurement equation for a fixed set of tenors.
#[derive(Debug, Clone, PartialEq)]
pub struct SsMeasurementSpec {
    /// `A(τ_i)`.
    pub d: DVector<f64>,
    /// 2×m loadings: row 0 `e^{−κτ_i}`, row 1 `e^{−γτ_i}`.
    pub f: DMatrix<f64>,
    /// `diag(σ_i²)`.
    pub sigma_v: DMatrix<f64>,
}

pub fn ss_transition(params: &ModelParams, dt: f64) -> TransitionSpec {
    let dt = dt.max(0.0);
    TransitionSpec {
        c: Vector2::new(0.0, params.mu_xi * decay_integral(params.gamma, dt)),
        e: Matrix2::new(
            (-params.kappa * dt).exp(),
            0.0,
            0.0,
            (-params.gamma * dt).exp(),
        ),
        sigma_w: factor_covariance(params, dt),
    }
}

/// Deterministic term `A(τ)` of the log futures price.
pub fn ss_a(params: &ModelParams, tau: f64) -> f64 {
    let (k, g) = (params.kappa, params.gamma);
    let (sc, sx) = (params.sigma_chi, params.sigma_xi);
    let drift = -params.lambda_chi * decay_integral(k, tau)
        + (params.mu_xi - params.lambda_xi) * decay_integral(g, tau);
    let variance = decay_integral(2.0 * k, tau) * sc * sc
        + decay_integral(2.0 * g, tau) * sx * sx
        + 2.0 * decay_integral(k + g, tau) * sc * sx * params.rho;
    drift + 0.5 * variance
}

/// `log F(t, t+τ) = e^{−κτ} χ + e^{−γτ} ξ + A(τ)`.
pub fn ss_log_futures(params: &ModelParams, x: StateVector, tau: f64) -> f64 {
    (-params.kappa * tau).exp() * x.chi + (-params.gamma * tau).exp() * x.xi + ss_a(params, tau)
}

pub(crate) fn check_tenors(tenors: &[f64]) -> Result<(), ModelError> {
    let finite = tenors.iter().all(|t| t.is_finite() && *t >= 0.0);
    let increasing = tenors.windows(2).all(|w| w[1] > w[0]);
    if finite && increasing {
        Ok(())
    } else {
        Err(ModelError::InvalidTenors)
    }
}

pub fn ss_measurement(
    params: &ModelParams,
    tenors: &[f64],
) -> Result<SsMeasurementSpec, ModelError> {
    check_tenors(tenors)?;
    if tenors.len() != params.meas_sd.len() {
        return Err(ModelError::TenorCountMismatch {
            tenors: tenors.len(),
            sds: params.meas_sd.len(),
        });
    }
    let m = tenors.len();
    let d = DVector::from_iterator(m, tenors.iter().map(|&t| ss_a(params, t)));
    let f = DMatrix::from_fn(2, m, |r, c| {
        let rate = if r == 0 { params.kappa } else { params.gamma };
        (-rate * tenors[c]).exp()
    });
    let sigma_v = DMatrix::from_diagonal(&DVector::from_iterator(
        m,
        params.meas_sd.iter().map(|s| s * s),
    ));
    Ok(SsMeasurementSpec { d, f, sigma_v })
}
