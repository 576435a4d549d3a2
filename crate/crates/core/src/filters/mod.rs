//! Kalman-type filters for additive-noise state-space systems
//!
//! ```text
//! x_t = f(x_{t−1}) + w_t,   w_t ~ N(0, Σ_w)
//! y_t = h(x_t) + v_t,       v_t ~ N(0, Σ_v)
//! ```
//!
//! and the prediction-error log-likelihood
//! `−nm/2 log 2π − ½ Σ_t (log det L_t + e_tᵀ L_t⁻¹ e_t)`.
//!
//! Observations are passed as an `n × m` matrix, one row per time step.

mod kalman;
mod systems;
mod unscented;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

pub use kalman::{ekf_loglik, ekf_run, kf_loglik, kf_run};
pub use systems::{pd_system, ss_linear_system, PdMeasurement};
pub use unscented::{sigma_points, ukf_loglik, ukf_run, ukf_run_with, SigmaPointSet};

/// Step of the central finite differences used when a Jacobian is absent.
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("innovation covariance not positive definite at step {step}")]
    NonPDInnovation { step: usize },
    #[error("non-finite {which} Jacobian at step {step}")]
    JacobianFailure { step: usize, which: &'static str },
    #[error("covariance square root failed at step {step}")]
    SqrtFailure { step: usize },
    #[error("non-finite filter state at step {step}")]
    NonFinite { step: usize },
    #[error("{what}: got dimension {got}, expected {want}")]
    DimMismatch {
        what: &'static str,
        got: usize,
        want: usize,
    },
    #[error("no observations")]
    EmptyPanel,
}

pub type StateMap = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type JacobianMap = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// General additive-noise system. Missing Jacobians are replaced by
/// central finite differences in the EKF.
pub struct StateSpaceSystem {
    pub f: StateMap,
    pub h: StateMap,
    pub jf: Option<JacobianMap>,
    pub jh: Option<JacobianMap>,
    pub sigma_w: DMatrix<f64>,
    pub sigma_v: DMatrix<f64>,
    pub a0: DVector<f64>,
    pub p0: DMatrix<f64>,
}

impl StateSpaceSystem {
    pub fn state_dim(&self) -> usize {
        self.a0.len()
    }

    pub fn obs_dim(&self) -> usize {
        self.sigma_v.nrows()
    }

    fn check(&self, obs: &DMatrix<f64>) -> Result<(), FilterError> {
        let n = self.state_dim();
        check_dims(n, self.obs_dim(), &self.p0, &self.sigma_w, &self.sigma_v, obs)
    }
}

/// `x_t = c + E x_{t−1} + w_t`, `y_t = d + Z x_t + v_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub c: DVector<f64>,
    pub e: DMatrix<f64>,
    pub d: DVector<f64>,
    /// `m × n` measurement loadings.
    pub z: DMatrix<f64>,
    pub sigma_w: DMatrix<f64>,
    pub sigma_v: DMatrix<f64>,
    pub a0: DVector<f64>,
    pub p0: DMatrix<f64>,
}

impl LinearSystem {
    pub fn state_dim(&self) -> usize {
        self.a0.len()
    }

    pub fn obs_dim(&self) -> usize {
        self.d.len()
    }

    fn check(&self, obs: &DMatrix<f64>) -> Result<(), FilterError> {
        let (n, m) = (self.state_dim(), self.obs_dim());
        dim("c", self.c.len(), n)?;
        dim("E", self.e.nrows(), n)?;
        dim("E", self.e.ncols(), n)?;
        dim("Z rows", self.z.nrows(), m)?;
        dim("Z cols", self.z.ncols(), n)?;
        check_dims(n, m, &self.p0, &self.sigma_w, &self.sigma_v, obs)
    }

    /// The same system with closures, analytic Jacobians included.
    pub fn to_state_space(&self) -> StateSpaceSystem {
        let (c, e) = (self.c.clone(), self.e.clone());
        let (d, z) = (self.d.clone(), self.z.clone());
        let (e2, z2) = (self.e.clone(), self.z.clone());
        StateSpaceSystem {
            f: Box::new(move |x| &c + &e * x),
            h: Box::new(move |x| &d + &z * x),
            jf: Some(Box::new(move |_| e2.clone())),
            jh: Some(Box::new(move |_| z2.clone())),
            sigma_w: self.sigma_w.clone(),
            sigma_v: self.sigma_v.clone(),
            a0: self.a0.clone(),
            p0: self.p0.clone(),
        }
    }
}

fn dim(what: &'static str, got: usize, want: usize) -> Result<(), FilterError> {
    if got == want {
        Ok(())
    } else {
        Err(FilterError::DimMismatch { what, got, want })
    }
}

fn check_dims(
    n: usize,
    m: usize,
    p0: &DMatrix<f64>,
    sigma_w: &DMatrix<f64>,
    sigma_v: &DMatrix<f64>,
    obs: &DMatrix<f64>,
) -> Result<(), FilterError> {
    dim("P0", p0.nrows(), n)?;
    dim("P0", p0.ncols(), n)?;
    dim("Sigma_w", sigma_w.nrows(), n)?;
    dim("Sigma_w", sigma_w.ncols(), n)?;
    dim("Sigma_v", sigma_v.ncols(), m)?;
    dim("observation columns", obs.ncols(), m)?;
    if obs.nrows() == 0 {
        return Err(FilterError::EmptyPanel);
    }
    Ok(())
}

/// Everything a filter produced, per time step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterRun {
    /// `a_{t|t−1}`.
    pub predicted_mean: Vec<DVector<f64>>,
    /// `P_{t|t−1}`.
    pub predicted_cov: Vec<DMatrix<f64>>,
    /// `e_t = y_t − ŷ_{t|t−1}`.
    pub innovation: Vec<DVector<f64>>,
    /// `L_t`.
    pub innovation_cov: Vec<DMatrix<f64>>,
    /// `a_t`.
    pub updated_mean: Vec<DVector<f64>>,
    /// `P_t`.
    pub updated_cov: Vec<DMatrix<f64>>,
    /// `ŷ_{t|t−1}`.
    pub fitted: Vec<DVector<f64>>,
    /// `h(a_t)`, the measurement at the filtered state.
    pub fitted_updated: Vec<DVector<f64>>,
    pub loglik: f64,
}

impl FilterRun {
    pub fn len(&self) -> usize {
        self.innovation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.innovation.is_empty()
    }

    /// Filtered states as an `n × dim` matrix.
    pub fn filtered_states(&self) -> DMatrix<f64> {
        let k = self.updated_mean.first().map_or(0, |a| a.len());
        DMatrix::from_fn(self.len(), k, |t, j| self.updated_mean[t][j])
    }
}

/// Per-step accumulation shared by all filters. With `store` off only the
/// log-likelihood is kept.
struct Recorder {
    store: bool,
    run: FilterRun,
    quad: f64,
    m_total: usize,
}

struct Step<'a> {
    a_pred: &'a DVector<f64>,
    p_pred: &'a DMatrix<f64>,
    e: &'a DVector<f64>,
    /// Needed only when storing.
    l: Option<&'a DMatrix<f64>>,
    /// `log det L + eᵀL⁻¹e`.
    quad: f64,
    a: &'a DVector<f64>,
    p: &'a DMatrix<f64>,
    y_pred: &'a DVector<f64>,
}

impl Recorder {
    fn new(store: bool) -> Self {
        Recorder {
            store,
            run: FilterRun::default(),
            quad: 0.0,
            m_total: 0,
        }
    }

    fn push(&mut self, s: Step<'_>, y_upd: impl FnOnce() -> DVector<f64>) {
        self.quad += s.quad;
        self.m_total += s.e.len();
        if self.store {
            let r = &mut self.run;
            r.predicted_mean.push(s.a_pred.clone());
            r.predicted_cov.push(s.p_pred.clone());
            r.innovation.push(s.e.clone());
            r.innovation_cov
                .push(s.l.expect("innovation covariance is kept when storing").clone());
            r.updated_mean.push(s.a.clone());
            r.updated_cov.push(s.p.clone());
            r.fitted.push(s.y_pred.clone());
            r.fitted_updated.push(y_upd());
        }
    }

    fn finish(mut self) -> FilterRun {
        self.run.loglik = -0.5 * (self.m_total as f64 * LN_2PI + self.quad);
        self.run
    }
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// `log det L + eᵀL⁻¹e` from the Cholesky factor of `L`.
fn chol_quad(chol: &Cholesky<f64, Dyn>, e: &DVector<f64>) -> f64 {
    log_det(chol) + e.dot(&chol.solve(e))
}

/// `(P + Pᵀ) / 2` in place.
pub(crate) fn symmetrize(p: &mut DMatrix<f64>) {
    let n = p.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (p[(i, j)] + p[(j, i)]);
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
    }
}

/// Cholesky of the symmetrized innovation covariance.
fn innovation_chol(l: &mut DMatrix<f64>, step: usize) -> Result<Cholesky<f64, Dyn>, FilterError> {
    symmetrize(l);
    if l.iter().any(|v| !v.is_finite()) {
        return Err(FilterError::NonFinite { step });
    }
    Cholesky::new(l.clone()).ok_or(FilterError::NonPDInnovation { step })
}

fn finite_vec(v: &DVector<f64>, step: usize) -> Result<(), FilterError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(FilterError::NonFinite { step })
    }
}

/// Log-likelihood from the stored innovations and their covariances.
/// Returns `NaN` if some `L_t` is not positive definite.
pub fn loglik_from_innovations(run: &FilterRun) -> f64 {
    loglik_from_parts(&run.innovation, &run.innovation_cov)
}

pub fn loglik_from_parts(e: &[DVector<f64>], l: &[DMatrix<f64>]) -> f64 {
    let mut total = 0.0;
    let mut m_total = 0;
    for (e, l) in e.iter().zip(l) {
        let Some(chol) = Cholesky::new(l.clone()) else {
            return f64::NAN;
        };
        total += log_det(&chol) + e.dot(&chol.solve(e));
        m_total += e.len();
    }
    -0.5 * (m_total as f64 * LN_2PI + total)
}
