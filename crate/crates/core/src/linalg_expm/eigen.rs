//! Eigen decomposition of a general real matrix.
//!
//! Eigenvalues come from nalgebra's real Schur form; eigenvectors are then
//! obtained by shifted inverse iteration in complex arithmetic and scaled to
//! unit Euclidean norm.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ExpmError;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenData {
    pub values: Vec<Complex64>,
    /// Unit-norm eigenvectors as columns, matching `values`.
    pub vectors: DMatrix<Complex64>,
}

const INVERSE_ITERATIONS: usize = 3;
const MAX_SHIFT_ATTEMPTS: usize = 50;

pub fn eigen_decompose(a: &DMatrix<f64>) -> Result<EigenData, ExpmError> {
    let n = a.nrows();
    let values: Vec<Complex64> = a
        .clone()
        .try_schur(f64::EPSILON, 1000 * n.max(1))
        .ok_or(ExpmError::Eigen("Schur iteration did not converge"))?
        .complex_eigenvalues()
        .iter()
        .copied()
        .collect();
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(ExpmError::Eigen("non-finite eigenvalue"));
    }

    let scale = a.norm();
    if scale == 0.0 {
        return Ok(EigenData {
            values,
            vectors: DMatrix::identity(n, n),
        });
    }
    let ac = a.map(|x| Complex64::new(x, 0.0));
    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        // A tiny shift keeps the LU factors finite when lambda is exact.
        let mut shift = lambda + Complex64::new(scale * 1e-14, 0.0);
        let mut attempts = 0;
        let lu = loop {
            attempts += 1;
            if attempts > MAX_SHIFT_ATTEMPTS {
                return Err(ExpmError::Eigen("no usable inverse-iteration shift"));
            }
            let mut m = ac.clone();
            for i in 0..n {
                m[(i, i)] -= shift;
            }
            let lu = m.lu();
            if lu.u().diagonal().iter().all(|d| d.norm() > 0.0) {
                break lu;
            }
            shift += Complex64::new(scale * 1e-12 * attempts as f64, 0.0);
        };
        // Deterministic start vector with no special alignment.
        let mut v = nalgebra::DVector::<Complex64>::from_fn(n, |i, _| {
            Complex64::new(1.0 + 0.1 * i as f64, 0.05 * ((i * 7 + k) % 5) as f64)
        });
        for _ in 0..INVERSE_ITERATIONS {
            v = lu
                .solve(&v)
                .ok_or(ExpmError::Eigen("inverse iteration solve failed"))?;
            let nv = v.norm();
            if !nv.is_finite() || nv == 0.0 {
                return Err(ExpmError::Eigen("inverse iteration diverged"));
            }
            v /= Complex64::new(nv, 0.0);
        }
        vectors.set_column(k, &v);
    }
    Ok(EigenData { values, vectors })
}

/// `‖V‖₁ ‖V⁻¹‖₁`, or infinity when `V` is singular.
pub(crate) fn condition_1(v: &DMatrix<Complex64>) -> (f64, Option<DMatrix<Complex64>>) {
    let inv = v.clone().try_inverse();
    match &inv {
        Some(vi) => (norm1_c(v) * norm1_c(vi), inv),
        None => (f64::INFINITY, None),
    }
}

fn norm1_c(a: &DMatrix<Complex64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}
