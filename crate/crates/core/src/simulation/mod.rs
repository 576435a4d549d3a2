//! Synthetic factor paths and constant-tenor futures panels.
//!
//! Each panel column is a rolling contract with fixed time to maturity.
//! States follow the exact OU transition; observations add independent
//! `N(0, σ_i²)` noise to the model price (log price for Schwartz-Smith,
//! raw price for the polynomial model).

mod io;

use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filters::PdMeasurement;
use crate::linalg_expm::ExpmMethod;
use crate::models::{
    months_to_years, ss_log_futures, ss_transition, CoordinateVector, ModelError, ModelKind,
    ModelParams, StateVector,
};
use crate::rng::{normal, stream, Purpose};

pub use io::{
    read_panel, read_panel_csv, read_states_csv, write_panel, write_panel_csv, write_states_csv,
    PanelFiles, PanelMetadata,
};

/// One trading day in years.
pub const DEFAULT_DT: f64 = 1.0 / 360.0;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}, line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("metadata: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    LogPrice,
    RawPrice,
}

impl Convention {
    pub fn for_model(model: ModelKind) -> Self {
        match model {
            ModelKind::Ss => Convention::LogPrice,
            ModelKind::Pd => Convention::RawPrice,
        }
    }
}

/// `n × m` observations at fixed tenors.
#[derive(Debug, Clone, PartialEq)]
pub struct FuturesPanel {
    pub observations: DMatrix<f64>,
    /// Years.
    pub tenors: Vec<f64>,
    /// Years per row.
    pub dt: f64,
    pub convention: Convention,
    /// `n × 2` true `(χ, ξ)` when the panel is simulated.
    pub true_states: Option<DMatrix<f64>>,
}

impl FuturesPanel {
    pub fn n_obs(&self) -> usize {
        self.observations.nrows()
    }

    pub fn n_contracts(&self) -> usize {
        self.observations.ncols()
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: String| Err(SimulationError::InvalidConfig(m));
        if self.n_obs() == 0 || self.n_contracts() == 0 {
            return bad("panel needs at least one row and one column".into());
        }
        if self.tenors.len() != self.n_contracts() {
            return bad(format!(
                "{} tenors for {} columns",
                self.tenors.len(),
                self.n_contracts()
            ));
        }
        if self.tenors.iter().any(|t| !(*t > 0.0 && t.is_finite()))
            || self.tenors.windows(2).any(|w| w[1] <= w[0])
        {
            return bad("tenors must be positive and strictly increasing".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if self.observations.iter().any(|v| !v.is_finite()) {
            return bad("observations must be finite".into());
        }
        if let Some(s) = &self.true_states {
            if s.nrows() != self.n_obs() || s.ncols() != 2 {
                return bad("true states must be n x 2".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_obs: usize,
    pub tenors_months: Vec<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    pub model: ModelKind,
    pub params: ModelParams,
    /// Polynomial model only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<CoordinateVector>,
    #[serde(default)]
    pub expm_method: ExpmMethod,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: String| Err(SimulationError::InvalidConfig(m));
        if self.n_obs < 2 {
            return bad(format!("n_obs must be >= 2, got {}", self.n_obs));
        }
        if self.tenors_months.is_empty() {
            return bad("tenors_months must not be empty".into());
        }
        if self.tenors_months.iter().any(|t| !(*t > 0.0 && t.is_finite()))
            || self.tenors_months.windows(2).any(|w| w[1] <= w[0])
        {
            return bad("tenors_months must be positive and strictly increasing".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if self.params.meas_sd.len() != self.tenors_months.len() {
            return bad(format!(
                "params.meas_sd has {} entries for {} tenors",
                self.params.meas_sd.len(),
                self.tenors_months.len()
            ));
        }
        self.params.validate()?;
        match (self.model, &self.coords) {
            (ModelKind::Pd, None) => bad("model pd needs coords".into()),
            (ModelKind::Pd, Some(c)) if c.len() != 6 => {
                bad(format!("coords must have 6 entries, got {}", c.len()))
            }
            _ => Ok(()),
        }
    }

    pub fn tenors_years(&self) -> Vec<f64> {
        self.tenors_months.iter().map(|&m| months_to_years(m)).collect()
    }
}

/// Generating values of the simulation study: `m` contracts with
/// `σ_i = 0.01·(m − i + 1)`, i.e. 0.13..0.01 for 13 contracts.
pub fn reference_params(m: usize) -> ModelParams {
    ModelParams {
        kappa: 0.5,
        gamma: 0.3,
        mu_xi: 1.0,
        sigma_chi: 1.5,
        sigma_xi: 1.3,
        rho: -0.3,
        lambda_chi: 0.5,
        lambda_xi: 0.3,
        meas_sd: (0..m).map(|i| 0.01 * (m - i) as f64).collect(),
        chi0: 0.0,
        xi0: 3.33,
    }
}

/// Spot polynomial `5 + 2χ + 2ξ + 2χ² + 3χξ + ξ²`.
pub fn reference_coords() -> CoordinateVector {
    CoordinateVector::new(vec![5.0, 2.0, 2.0, 2.0, 3.0, 1.0])
}

/// 1000 daily observations of contracts with 1..=m months to maturity.
pub fn reference_config(model: ModelKind, m: usize, seed: u64) -> SimulationConfig {
    SimulationConfig {
        n_obs: 1000,
        tenors_months: (1..=m).map(|i| i as f64).collect(),
        dt: DEFAULT_DT,
        seed,
        model,
        params: reference_params(m),
        coords: (model == ModelKind::Pd).then(reference_coords),
        expm_method: ExpmMethod::default(),
    }
}

/// Lower Cholesky factor of a 2×2 covariance, tolerating singularity.
fn chol2(s: &Matrix2<f64>) -> Matrix2<f64> {
    let l11 = s[(0, 0)].max(0.0).sqrt();
    let l21 = if l11 > 0.0 { s[(1, 0)] / l11 } else { 0.0 };
    let l22 = (s[(1, 1)] - l21 * l21).max(0.0).sqrt();
    Matrix2::new(l11, 0.0, l21, l22)
}

/// `n_obs × 2` path with `x_1 = (χ_0, ξ_0)` and exact OU steps after that.
pub fn simulate_states(params: &ModelParams, n_obs: usize, dt: f64, seed: u64) -> DMatrix<f64> {
    let tr = ss_transition(params, dt);
    let l = chol2(&tr.sigma_w);
    let mut rng = stream(seed, Purpose::StateNoise, 0);
    let mut out = DMatrix::zeros(n_obs, 2);
    let mut x = Vector2::new(params.chi0, params.xi0);
    for t in 0..n_obs {
        if t > 0 {
            let z = Vector2::new(normal(&mut rng), normal(&mut rng));
            x = tr.c + tr.e * x + l * z;
        }
        out[(t, 0)] = x[0];
        out[(t, 1)] = x[1];
    }
    out
}

/// Noise-free model prices at each state row, in the model's convention.
pub fn model_prices(
    model: ModelKind,
    params: &ModelParams,
    coords: Option<&CoordinateVector>,
    tenors: &[f64],
    states: &DMatrix<f64>,
    method: ExpmMethod,
) -> Result<DMatrix<f64>, SimulationError> {
    let (n, m) = (states.nrows(), tenors.len());
    let mut out = DMatrix::zeros(n, m);
    match model {
        ModelKind::Ss => {
            for t in 0..n {
                let x = StateVector::new(states[(t, 0)], states[(t, 1)]);
                for (i, &tau) in tenors.iter().enumerate() {
                    out[(t, i)] = ss_log_futures(params, x, tau);
                }
            }
        }
        ModelKind::Pd => {
            let coords = coords
                .ok_or_else(|| SimulationError::InvalidConfig("model pd needs coords".into()))?;
            let meas = PdMeasurement::new(params, coords, tenors, method)?;
            for t in 0..n {
                let y = meas.eval(&states.row(t).transpose());
                out.set_row(t, &y.transpose());
            }
        }
    }
    Ok(out)
}

pub fn simulate_panel(config: &SimulationConfig) -> Result<FuturesPanel, SimulationError> {
    config.validate()?;
    let tenors = config.tenors_years();
    let states = simulate_states(&config.params, config.n_obs, config.dt, config.seed);
    let mut obs = model_prices(
        config.model,
        &config.params,
        config.coords.as_ref(),
        &tenors,
        &states,
        config.expm_method,
    )?;
    let mut rng = stream(config.seed, Purpose::MeasurementNoise, 0);
    for t in 0..obs.nrows() {
        for (i, sd) in config.params.meas_sd.iter().enumerate() {
            obs[(t, i)] += sd * normal(&mut rng);
        }
    }
    let panel = FuturesPanel {
        observations: obs,
        tenors,
        dt: config.dt,
        convention: Convention::for_model(config.model),
        true_states: Some(states),
    };
    panel.validate()?;
    Ok(panel)
}
