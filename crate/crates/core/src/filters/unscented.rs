//! Additive-noise unscented Kalman filter.
//!
//! Sigma points `a, a ± √((n+λ)P)` with weights `W_0 = λ/(n+λ)` and
//! `W_i = 1/(2(n+λ))` for both mean and covariance. The measurement step
//! draws a fresh set from the predicted moments.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::{
    chol_quad, finite_vec, innovation_chol, symmetrize, FilterError, FilterRun, Recorder, StateSpaceSystem,
    Step,
};

/// `2n + 1` points with their weights; point 0 is the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPointSet {
    pub points: Vec<DVector<f64>>,
    pub weights_mean: Vec<f64>,
    pub weights_cov: Vec<f64>,
}

impl SigmaPointSet {
    pub fn mean(&self) -> DVector<f64> {
        weighted_mean(&self.points, &self.weights_mean)
    }

    pub fn cov(&self) -> DMatrix<f64> {
        let m = self.mean();
        weighted_cross(&self.points, &m, &self.points, &m, &self.weights_cov)
    }
}

/// Lower Cholesky factor of `p`, adding jitter `1e-10·tr(P)/n` escalated
/// ×10 while it stays below `1e-4·tr(P)`.
pub(crate) fn robust_sqrt(p: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if let Some(c) = Cholesky::new(p.clone()) {
        return Some(c.unpack());
    }
    let n = p.nrows();
    let trace = p.trace();
    if !(trace > 0.0 && trace.is_finite()) {
        return None;
    }
    let mut jitter = 1e-10 * trace / n as f64;
    while jitter <= 1e-4 * trace {
        let mut q = p.clone();
        for i in 0..n {
            q[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(q) {
            return Some(c.unpack());
        }
        jitter *= 10.0;
    }
    None
}

/// Sigma points of `N(mean, cov)` for scaling `lambda`; `None` if no square
/// root of `cov` exists even after jitter.
pub fn sigma_points(mean: &DVector<f64>, cov: &DMatrix<f64>, lambda: f64) -> Option<SigmaPointSet> {
    let n = mean.len();
    let scale = n as f64 + lambda;
    let root = robust_sqrt(cov)? * scale.sqrt();
    let mut points = Vec::with_capacity(2 * n + 1);
    points.push(mean.clone());
    for j in 0..n {
        points.push(mean + root.column(j));
    }
    for j in 0..n {
        points.push(mean - root.column(j));
    }
    let wi = 1.0 / (2.0 * scale);
    let mut w = vec![wi; 2 * n + 1];
    w[0] = lambda / scale;
    Some(SigmaPointSet {
        points,
        weights_mean: w.clone(),
        weights_cov: w,
    })
}

fn weighted_mean(points: &[DVector<f64>], w: &[f64]) -> DVector<f64> {
    let mut m = DVector::zeros(points[0].len());
    for (p, &wi) in points.iter().zip(w) {
        if wi != 0.0 {
            m += p * wi;
        }
    }
    m
}

fn weighted_cross(
    xs: &[DVector<f64>],
    mx: &DVector<f64>,
    ys: &[DVector<f64>],
    my: &DVector<f64>,
    w: &[f64],
) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(mx.len(), my.len());
    for ((x, y), &wi) in xs.iter().zip(ys).zip(w) {
        if wi != 0.0 {
            c += (x - mx) * (y - my).transpose() * wi;
        }
    }
    c
}

/// UKF with `λ = 0`.
pub fn ukf_run(sys: &StateSpaceSystem, obs: &DMatrix<f64>) -> Result<FilterRun, FilterError> {
    ukf(sys, obs, 0.0, true)
}

pub fn ukf_run_with(
    sys: &StateSpaceSystem,
    obs: &DMatrix<f64>,
    lambda: f64,
) -> Result<FilterRun, FilterError> {
    ukf(sys, obs, lambda, true)
}

pub fn ukf_loglik(sys: &StateSpaceSystem, obs: &DMatrix<f64>) -> Result<f64, FilterError> {
    ukf(sys, obs, 0.0, false).map(|r| r.loglik)
}

fn ukf(
    sys: &StateSpaceSystem,
    obs: &DMatrix<f64>,
    lambda: f64,
    store: bool,
) -> Result<FilterRun, FilterError> {
    sys.check(obs)?;
    let mut rec = Recorder::new(store);
    let mut a = sys.a0.clone();
    let mut p = sys.p0.clone();
    for t in 0..obs.nrows() {
        let prior = sigma_points(&a, &p, lambda).ok_or(FilterError::SqrtFailure { step: t })?;
        let xs: Vec<DVector<f64>> = prior.points.iter().map(|x| (sys.f)(x)).collect();
        let a_pred = weighted_mean(&xs, &prior.weights_mean);
        finite_vec(&a_pred, t)?;
        let mut p_pred =
            weighted_cross(&xs, &a_pred, &xs, &a_pred, &prior.weights_cov) + &sys.sigma_w;
        symmetrize(&mut p_pred);

        let pred =
            sigma_points(&a_pred, &p_pred, lambda).ok_or(FilterError::SqrtFailure { step: t })?;
        let ys: Vec<DVector<f64>> = pred.points.iter().map(|x| (sys.h)(x)).collect();
        let y_pred = weighted_mean(&ys, &pred.weights_mean);
        finite_vec(&y_pred, t)?;
        let mut l = weighted_cross(&ys, &y_pred, &ys, &y_pred, &pred.weights_cov) + &sys.sigma_v;
        let chol = innovation_chol(&mut l, t)?;
        let cxy = weighted_cross(&pred.points, &a_pred, &ys, &y_pred, &pred.weights_cov);
        let k = chol.solve(&cxy.transpose()).transpose();

        let y = obs.row(t).transpose();
        let e = &y - &y_pred;
        let a_new = &a_pred + &k * &e;
        finite_vec(&a_new, t)?;
        let mut p_new = &p_pred - &k * &l * k.transpose();
        symmetrize(&mut p_new);
        rec.push(
            Step {
                a_pred: &a_pred,
                p_pred: &p_pred,
                e: &e,
                l: Some(&l),
                quad: chol_quad(&chol, &e),
                a: &a_new,
                p: &p_new,
                y_pred: &y_pred,
            },
            || (sys.h)(&a_new),
        );
        a = a_new;
        p = p_new;
    }
    Ok(rec.finish())
}
