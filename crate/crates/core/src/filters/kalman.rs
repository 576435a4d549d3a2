//! Linear and extended Kalman filters.

use nalgebra::{DMatrix, DVector};

use super::{
    chol_quad, finite_vec, innovation_chol, symmetrize, FilterError, FilterRun, LinearSystem,
    Recorder, StateMap, StateSpaceSystem, Step, FD_STEP,
};

pub fn kf_run(sys: &LinearSystem, obs: &DMatrix<f64>) -> Result<FilterRun, FilterError> {
    kf(sys, obs, true)
}

/// Log-likelihood only; nothing per step is stored.
pub fn kf_loglik(sys: &LinearSystem, obs: &DMatrix<f64>) -> Result<f64, FilterError> {
    kf(sys, obs, false).map(|r| r.loglik)
}

fn kf(sys: &LinearSystem, obs: &DMatrix<f64>, store: bool) -> Result<FilterRun, FilterError> {
    sys.check(obs)?;
    let mut rec = Recorder::new(store);
    let noise = Noise::new(&sys.sigma_v);
    let mut a = sys.a0.clone();
    let mut p = sys.p0.clone();
    let et = sys.e.transpose();
    for t in 0..obs.nrows() {
        let a_pred = &sys.c + &sys.e * &a;
        let mut p_pred = &sys.e * &p * &et + &sys.sigma_w;
        symmetrize(&mut p_pred);
        let y_pred = &sys.d + &sys.z * &a_pred;
        let y = obs.row(t).transpose();
        let u = update(&a_pred, &p_pred, &sys.z, &y, &y_pred, &noise, store, t)?;
        rec.push(
            Step {
                a_pred: &a_pred,
                p_pred: &p_pred,
                e: &u.e,
                l: u.l.as_ref(),
                quad: u.quad,
                a: &u.a,
                p: &u.p,
                y_pred: &y_pred,
            },
            || &sys.d + &sys.z * &u.a,
        );
        a = u.a;
        p = u.p;
    }
    Ok(rec.finish())
}

pub fn ekf_run(sys: &StateSpaceSystem, obs: &DMatrix<f64>) -> Result<FilterRun, FilterError> {
    ekf(sys, obs, true)
}

pub fn ekf_loglik(sys: &StateSpaceSystem, obs: &DMatrix<f64>) -> Result<f64, FilterError> {
    ekf(sys, obs, false).map(|r| r.loglik)
}

fn ekf(sys: &StateSpaceSystem, obs: &DMatrix<f64>, store: bool) -> Result<FilterRun, FilterError> {
    sys.check(obs)?;
    let mut rec = Recorder::new(store);
    let noise = Noise::new(&sys.sigma_v);
    let mut a = sys.a0.clone();
    let mut p = sys.p0.clone();
    for t in 0..obs.nrows() {
        let jf = jacobian(&sys.f, sys.jf.as_deref(), &a, t, "transition")?;
        let a_pred = (sys.f)(&a);
        finite_vec(&a_pred, t)?;
        let mut p_pred = &jf * &p * jf.transpose() + &sys.sigma_w;
        symmetrize(&mut p_pred);
        let jh = jacobian(&sys.h, sys.jh.as_deref(), &a_pred, t, "measurement")?;
        let y_pred = (sys.h)(&a_pred);
        finite_vec(&y_pred, t)?;
        let y = obs.row(t).transpose();
        let u = update(&a_pred, &p_pred, &jh, &y, &y_pred, &noise, store, t)?;
        rec.push(
            Step {
                a_pred: &a_pred,
                p_pred: &p_pred,
                e: &u.e,
                l: u.l.as_ref(),
                quad: u.quad,
                a: &u.a,
                p: &u.p,
                y_pred: &y_pred,
            },
            || (sys.h)(&u.a),
        );
        a = u.a;
        p = u.p;
    }
    Ok(rec.finish())
}

pub(super) struct Update {
    pub e: DVector<f64>,
    /// Innovation covariance; always kept on the general path, only when
    /// storing on the diagonal one.
    pub l: Option<DMatrix<f64>>,
    pub quad: f64,
    pub a: DVector<f64>,
    pub p: DMatrix<f64>,
}

/// Measurement noise, split by whether the Woodbury form applies.
enum Noise<'a> {
    /// Positive diagonal: variances and their sum of logs.
    Diagonal {
        full: &'a DMatrix<f64>,
        inv: DVector<f64>,
        log_det: f64,
    },
    Full(&'a DMatrix<f64>),
}

impl<'a> Noise<'a> {
    fn new(sigma_v: &'a DMatrix<f64>) -> Self {
        let m = sigma_v.nrows();
        let off_zero = (0..m).all(|i| (0..m).all(|j| i == j || sigma_v[(i, j)] == 0.0));
        let d = sigma_v.diagonal();
        if off_zero && d.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Noise::Diagonal {
                full: sigma_v,
                inv: d.map(|v| 1.0 / v),
                log_det: d.iter().map(|v| v.ln()).sum(),
            }
        } else {
            Noise::Full(sigma_v)
        }
    }
}

/// Measurement update with linearized measurement `J`:
/// `L = J P Jᵀ + Σ_v`, `K = P Jᵀ L⁻¹`, `P_t = (I − K J) P`.
///
/// With diagonal `Σ_v = D` the same quantities come from the `n × n`
/// matrix `S = I + P JᵀD⁻¹J`: `det L = det D · det S`,
/// `L⁻¹ = D⁻¹ − D⁻¹J S⁻¹P JᵀD⁻¹`, `K = S⁻¹P JᵀD⁻¹` and `P_t = S⁻¹P`.
#[allow(clippy::too_many_arguments)]
fn update(
    a_pred: &DVector<f64>,
    p_pred: &DMatrix<f64>,
    jh: &DMatrix<f64>,
    y: &DVector<f64>,
    y_pred: &DVector<f64>,
    noise: &Noise<'_>,
    store: bool,
    step: usize,
) -> Result<Update, FilterError> {
    let e = y - y_pred;
    let (a, mut p, l, quad) = match noise {
        Noise::Full(sigma_v) => {
            let jp = jh * p_pred;
            let mut l = &jp * jh.transpose() + *sigma_v;
            let chol = innovation_chol(&mut l, step)?;
            // Kᵀ = L⁻¹ J P, using the symmetry of P and L.
            let k = chol.solve(&jp).transpose();
            let a = a_pred + &k * &e;
            let n = a.len();
            let p = (DMatrix::identity(n, n) - &k * jh) * p_pred;
            let quad = chol_quad(&chol, &e);
            (a, p, Some(l), quad)
        }
        Noise::Diagonal { full, inv, log_det } => {
            let n = a_pred.len();
            let mut wj = jh.clone();
            for (i, mut row) in wj.row_iter_mut().enumerate() {
                row *= inv[i];
            }
            let s = DMatrix::identity(n, n) + p_pred * jh.tr_mul(&wj);
            if s.iter().any(|v| !v.is_finite()) {
                return Err(FilterError::NonFinite { step });
            }
            let lu = s.lu();
            let det = lu.determinant();
            if !(det > 0.0 && det.is_finite()) {
                return Err(FilterError::NonPDInnovation { step });
            }
            let we = wj.tr_mul(&e);
            let ke = lu
                .solve(&(p_pred * &we))
                .ok_or(FilterError::NonPDInnovation { step })?;
            let p = lu
                .solve(p_pred)
                .ok_or(FilterError::NonPDInnovation { step })?;
            let eie: f64 = e.iter().zip(inv.iter()).map(|(v, w)| v * v * w).sum();
            let quad = log_det + det.ln() + eie - we.dot(&ke);
            if !(quad.is_finite() && eie - we.dot(&ke) >= 0.0) {
                return Err(FilterError::NonPDInnovation { step });
            }
            let l = store.then(|| {
                let mut l = jh * p_pred * jh.transpose() + *full;
                symmetrize(&mut l);
                l
            });
            (a_pred + ke, p, l, quad)
        }
    };
    symmetrize(&mut p);
    finite_vec(&a, step)?;
    Ok(Update { e, l, quad, a, p })
}

fn jacobian(
    f: &StateMap,
    analytic: Option<&(dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync)>,
    x: &DVector<f64>,
    step: usize,
    which: &'static str,
) -> Result<DMatrix<f64>, FilterError> {
    let j = match analytic {
        Some(jf) => jf(x),
        None => fd_jacobian(f, x),
    };
    if j.iter().all(|v| v.is_finite()) {
        Ok(j)
    } else {
        Err(FilterError::JacobianFailure { step, which })
    }
}

/// Central differences with step [`FD_STEP`].
pub(crate) fn fd_jacobian(f: &StateMap, x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let cols: Vec<DVector<f64>> = (0..n)
        .map(|j| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += FD_STEP;
            xm[j] -= FD_STEP;
            (f(&xp) - f(&xm)) / (2.0 * FD_STEP)
        })
        .collect();
    DMatrix::from_columns(&cols)
}
