//! Two-factor model definitions and pricing.
//!
//! Both models share the factor dynamics
//!
//! ```text
//! dχ = −κχ dt + σ_χ dW^χ
//! dξ = (μ_ξ − γξ) dt + σ_ξ dW^ξ,     d⟨W^χ, W^ξ⟩ = ρ dt
//! ```
//!
//! with constant risk premia `λ_χ`, `λ_ξ` subtracted from the drifts under
//! the pricing measure. They differ in the spot map: `log S = χ + ξ` for
//! Schwartz-Smith, a degree-2 polynomial in `(χ, ξ)` for the polynomial
//! diffusion model.
//!
//! All times are in years.

mod polynomial;
mod schwartz_smith;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg_expm::ExpmError;

pub use polynomial::{
    generator_matrix, pd_basis_eval, pd_futures_price, pd_generator_matrix,
    pd_measurement_row_jacobian, pd_spot, CoordinateVector, GeneratorMatrix, GeneratorOptions,
    MonomialBasis, PdPricer,
};
pub(crate) use schwartz_smith::check_tenors;
pub use schwartz_smith::{
    ss_a, ss_log_futures, ss_measurement, ss_transition, SsMeasurementSpec, TransitionSpec,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("{tenors} tenors but {sds} measurement standard deviations")]
    TenorCountMismatch { tenors: usize, sds: usize },
    #[error("tenors must be finite, non-negative and strictly increasing")]
    InvalidTenors,
    #[error("coordinate vector has length {got}, basis needs {want}")]
    CoordinateLength { got: usize, want: usize },
    #[error(transparent)]
    Expm(#[from] ExpmError),
}

/// Which spot map a panel or fit uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Schwartz-Smith, observations are log prices.
    Ss,
    /// Degree-2 polynomial diffusion, observations are raw prices.
    Pd,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Ss => "ss",
            ModelKind::Pd => "pd",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ss" => Ok(ModelKind::Ss),
            "pd" => Ok(ModelKind::Pd),
            other => Err(format!("unknown model '{other}' (expected ss or pd)")),
        }
    }
}

/// Months to years.
pub fn months_to_years(months: f64) -> f64 {
    months / 12.0
}

/// State, risk-premium and measurement parameters plus the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub kappa: f64,
    pub gamma: f64,
    pub mu_xi: f64,
    pub sigma_chi: f64,
    pub sigma_xi: f64,
    pub rho: f64,
    pub lambda_chi: f64,
    pub lambda_xi: f64,
    /// Measurement noise standard deviation per contract.
    #[serde(default)]
    pub meas_sd: Vec<f64>,
    pub chi0: f64,
    pub xi0: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        fn bad(name: &'static str, value: f64, reason: &'static str) -> ModelError {
            ModelError::InvalidParam {
                name,
                value,
                reason,
            }
        }
        let positive = [
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("sigma_chi", self.sigma_chi),
            ("sigma_xi", self.sigma_xi),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(name, v, "must be finite and > 0"));
            }
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(bad("rho", self.rho, "must lie in (-1, 1)"));
        }
        let finite = [
            ("mu_xi", self.mu_xi),
            ("lambda_chi", self.lambda_chi),
            ("lambda_xi", self.lambda_xi),
            ("chi0", self.chi0),
            ("xi0", self.xi0),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(bad(name, v, "must be finite"));
            }
        }
        for &s in &self.meas_sd {
            if !(s > 0.0 && s.is_finite()) {
                return Err(bad("meas_sd", s, "must be finite and > 0"));
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> StateVector {
        StateVector::new(self.chi0, self.xi0)
    }
}

/// Short-term factor `χ` and long-term factor `ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVector {
    pub chi: f64,
    pub xi: f64,
}

impl StateVector {
    pub fn new(chi: f64, xi: f64) -> Self {
        StateVector { chi, xi }
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.chi, self.xi)
    }

    pub fn from_slice(v: &[f64]) -> Self {
        StateVector::new(v[0], v[1])
    }
}

/// `(1 − e^{−x})`, accurate for small `x`.
#[inline]
pub(crate) fn one_minus_exp_neg(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// `(1 − e^{−k t}) / k`, with the `k → 0` limit `t`.
#[inline]
pub(crate) fn decay_integral(k: f64, t: f64) -> f64 {
    if k == 0.0 {
        t
    } else {
        one_minus_exp_neg(k * t) / k
    }
}

/// Conditional mean and covariance of `(χ_T, ξ_T)` given `x0` under the
/// pricing measure, `tau = T − t0`.
pub fn rn_state_moments(
    params: &ModelParams,
    x0: StateVector,
    tau: f64,
) -> (Vector2<f64>, Matrix2<f64>) {
    let (k, g) = (params.kappa, params.gamma);
    let mean = Vector2::new(
        (-k * tau).exp() * x0.chi - params.lambda_chi * decay_integral(k, tau),
        (-g * tau).exp() * x0.xi + (params.mu_xi - params.lambda_xi) * decay_integral(g, tau),
    );
    (mean, factor_covariance(params, tau))
}

/// Covariance of the factor increment over `dt`; the same under either
/// measure.
pub(crate) fn factor_covariance(params: &ModelParams, dt: f64) -> Matrix2<f64> {
    let (k, g) = (params.kappa, params.gamma);
    let (sc, sx) = (params.sigma_chi, params.sigma_xi);
    let v_chi = decay_integral(2.0 * k, dt) * sc * sc;
    let v_xi = decay_integral(2.0 * g, dt) * sx * sx;
    let cov = decay_integral(k + g, dt) * sc * sx * params.rho;
    Matrix2::new(v_chi, cov, cov, v_xi)
}
