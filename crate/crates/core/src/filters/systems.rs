//! State-space systems for the two models at a fixed set of tenors.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{LinearSystem, StateSpaceSystem};
use crate::linalg_expm::ExpmMethod;
use crate::models::{
    ss_measurement, ss_transition, CoordinateVector, GeneratorOptions, ModelError, ModelParams,
    MonomialBasis, PdPricer, StateVector,
};

fn initial(params: &ModelParams) -> (DVector<f64>, DMatrix<f64>) {
    (
        DVector::from_vec(vec![params.chi0, params.xi0]),
        DMatrix::identity(2, 2),
    )
}

fn dyn2(m: &nalgebra::Matrix2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(2, 2, |i, j| m[(i, j)])
}

/// Schwartz-Smith in linear form, `y` in log prices. `P_0 = I`.
pub fn ss_linear_system(
    params: &ModelParams,
    tenors: &[f64],
    dt: f64,
) -> Result<LinearSystem, ModelError> {
    params.validate()?;
    let tr = ss_transition(params, dt);
    let ms = ss_measurement(params, tenors)?;
    let (a0, p0) = initial(params);
    Ok(LinearSystem {
        c: DVector::from_vec(vec![tr.c[0], tr.c[1]]),
        e: dyn2(&tr.e),
        d: ms.d,
        z: ms.f.transpose(),
        sigma_w: dyn2(&tr.sigma_w),
        sigma_v: ms.sigma_v,
        a0,
        p0,
    })
}

/// Polynomial futures prices at fixed tenors: `h(x) = Qᵀ H(x)` where column
/// `i` of `Q` is `e^{τ_i G} p`.
#[derive(Debug, Clone)]
pub struct PdMeasurement {
    basis: MonomialBasis,
    q: DMatrix<f64>,
}

impl PdMeasurement {
    pub fn new(
        params: &ModelParams,
        coords: &CoordinateVector,
        tenors: &[f64],
        method: ExpmMethod,
    ) -> Result<Self, ModelError> {
        crate::models::check_tenors(tenors)?;
        let pricer = PdPricer::new(params, coords, GeneratorOptions::default(), method)?;
        let cols = pricer.loadings(tenors)?;
        Ok(PdMeasurement {
            basis: pricer.basis().clone(),
            q: DMatrix::from_columns(&cols),
        })
    }

    /// `N × m` loadings.
    pub fn loadings(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        self.q.tr_mul(&self.basis.eval(StateVector::from_slice(x.as_slice())))
    }

    /// `m × 2`.
    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (dc, dx) = self.basis.gradient(StateVector::from_slice(x.as_slice()));
        let mut j = DMatrix::zeros(self.q.ncols(), 2);
        j.set_column(0, &self.q.tr_mul(&dc));
        j.set_column(1, &self.q.tr_mul(&dx));
        j
    }
}

/// Polynomial diffusion system, `y` in raw prices, with analytic Jacobians.
pub fn pd_system(
    params: &ModelParams,
    coords: &CoordinateVector,
    tenors: &[f64],
    dt: f64,
    method: ExpmMethod,
) -> Result<StateSpaceSystem, ModelError> {
    params.validate()?;
    if tenors.len() != params.meas_sd.len() {
        return Err(ModelError::TenorCountMismatch {
            tenors: tenors.len(),
            sds: params.meas_sd.len(),
        });
    }
    let tr = ss_transition(params, dt);
    let c = DVector::from_vec(vec![tr.c[0], tr.c[1]]);
    let e = dyn2(&tr.e);
    let e2 = e.clone();
    let meas = Arc::new(PdMeasurement::new(params, coords, tenors, method)?);
    let meas2 = Arc::clone(&meas);
    let (a0, p0) = initial(params);
    Ok(StateSpaceSystem {
        f: Box::new(move |x| &c + &e * x),
        h: Box::new(move |x| meas.eval(x)),
        jf: Some(Box::new(move |_| e2.clone())),
        jh: Some(Box::new(move |x| meas2.jacobian(x))),
        sigma_w: dyn2(&tr.sigma_w),
        sigma_v: DMatrix::from_diagonal(&DVector::from_iterator(
            params.meas_sd.len(),
            params.meas_sd.iter().map(|s| s * s),
        )),
        a0,
        p0,
    })
}
