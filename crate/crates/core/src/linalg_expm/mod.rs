//! Dense matrix exponential.
//!
//! Seven classical algorithms are provided behind [`expm`], together with the
//! random test-matrix generator and the stability/accuracy/timing benchmark
//! in [`bench`]. The polynomial diffusion pricer uses
//! [`ExpmMethod::EigenDecomposition`] by default.

pub mod bench;
mod eigen;
mod methods;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bench::{
    accuracy_metric, generate_test_matrix, generate_test_matrix_with, run_expm_benchmark,
    run_expm_benchmark_with, stability_metric, stability_metric_with, BenchOptions, EigenSource,
    ExpmBenchReport, GeneratedMatrix, MethodSummary, Perturbation,
};
pub use eigen::{eigen_decompose, EigenData};
pub(crate) use eigen::condition_1;

/// Condition estimate of the eigenvector matrix above which a result is
/// flagged as ill-conditioned.
pub const ILL_CONDITIONED_THRESHOLD: f64 = 1e14;

/// Minimum pairwise eigenvalue gap accepted by the interpolation methods.
pub const DISTINCT_EIGENVALUE_GAP: f64 = 1e-10;

/// Relative size of the discarded imaginary part above which a result
/// computed in complex arithmetic is flagged.
pub const IMAGINARY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpmError {
    #[error("matrix must be square with dim >= 1, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("{method} did not converge within {terms} terms")]
    NonConvergent { method: ExpmMethod, terms: usize },
    #[error("interpolation needs distinct eigenvalues; closest pair differs by {gap:e}")]
    SingularInterpolation { gap: f64 },
    #[error("eigenvector matrix is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("{0} produced a singular linear system")]
    SingularSystem(&'static str),
    #[error("dimension mismatch: {0}x{0} vs {1}x{1}")]
    DimMismatch(usize, usize),
    #[error("test matrix generator: eigenvector matrix singular after {0} redraws")]
    RetryExhausted(usize),
    #[error("eigensolver failed: {0}")]
    Eigen(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

/// The seven algorithms compared by the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpmMethod {
    Taylor,
    Pade,
    ScalingSquaring,
    Lagrange,
    Newton,
    Vandermonde,
    EigenDecomposition,
}

impl ExpmMethod {
    pub const ALL: [ExpmMethod; 7] = [
        ExpmMethod::Taylor,
        ExpmMethod::Pade,
        ExpmMethod::ScalingSquaring,
        ExpmMethod::Lagrange,
        ExpmMethod::Newton,
        ExpmMethod::Vandermonde,
        ExpmMethod::EigenDecomposition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExpmMethod::Taylor => "taylor",
            ExpmMethod::Pade => "pade",
            ExpmMethod::ScalingSquaring => "scaling_squaring",
            ExpmMethod::Lagrange => "lagrange",
            ExpmMethod::Newton => "newton",
            ExpmMethod::Vandermonde => "vandermonde",
            ExpmMethod::EigenDecomposition => "eigen_decomposition",
        }
    }

    /// Whether the method works from an eigen decomposition of the input.
    pub fn needs_eigen(self) -> bool {
        matches!(
            self,
            ExpmMethod::Lagrange
                | ExpmMethod::Newton
                | ExpmMethod::Vandermonde
                | ExpmMethod::EigenDecomposition
        )
    }

    /// Whether the method interpolates exp at the eigenvalues and so needs
    /// them to be distinct.
    pub fn is_interpolation(self) -> bool {
        matches!(
            self,
            ExpmMethod::Lagrange | ExpmMethod::Newton | ExpmMethod::Vandermonde
        )
    }
}

impl Default for ExpmMethod {
    fn default() -> Self {
        ExpmMethod::EigenDecomposition
    }
}

impl fmt::Display for ExpmMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExpmMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Ok(match key.as_str() {
            "taylor" => ExpmMethod::Taylor,
            "pade" => ExpmMethod::Pade,
            "scalingsquaring" | "scalingandsquaring" => ExpmMethod::ScalingSquaring,
            "lagrange" => ExpmMethod::Lagrange,
            "newton" => ExpmMethod::Newton,
            "vandermonde" => ExpmMethod::Vandermonde,
            "eigendecomposition" | "eigen" | "eig" => ExpmMethod::EigenDecomposition,
            _ => return Err(format!("unknown expm method '{s}'")),
        })
    }
}

/// Optional eigen data supplied by the caller, e.g. the ground truth of a
/// generated test matrix. When absent it is computed internally.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenHint {
    pub values: Vec<Complex64>,
    /// Eigenvectors as columns; only used by the eigen-decomposition method.
    pub vectors: Option<DMatrix<Complex64>>,
}

impl EigenHint {
    pub fn real(values: &[f64], vectors: Option<&DMatrix<f64>>) -> Self {
        EigenHint {
            values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            vectors: vectors.map(|v| v.map(|x| Complex64::new(x, 0.0))),
        }
    }
}

/// Result of [`expm_detailed`].
#[derive(Debug, Clone)]
pub struct ExpmOutcome {
    pub value: DMatrix<f64>,
    /// `‖V‖₁‖V⁻¹‖₁` of the eigenvector matrix, when one was used.
    pub condition: Option<f64>,
    /// Relative Frobenius size of the imaginary part dropped from a
    /// complex-arithmetic evaluation.
    pub imaginary_residual: f64,
}

impl ExpmOutcome {
    /// Set when the eigenvector condition exceeds
    /// [`ILL_CONDITIONED_THRESHOLD`] or the dropped imaginary part exceeds
    /// [`IMAGINARY_TOLERANCE`]. The value is still returned.
    pub fn ill_conditioned(&self) -> bool {
        self.condition.is_some_and(|c| !(c <= ILL_CONDITIONED_THRESHOLD))
            || !(self.imaginary_residual <= IMAGINARY_TOLERANCE)
    }

    /// Turn the ill-conditioning flag into an error.
    pub fn strict(self) -> Result<DMatrix<f64>, ExpmError> {
        if self.ill_conditioned() {
            Err(ExpmError::IllConditioned {
                condition: self.condition.unwrap_or(f64::INFINITY),
            })
        } else {
            Ok(self.value)
        }
    }
}

/// `e^A` by `method`, computing any eigen data internally.
pub fn expm(method: ExpmMethod, a: &DMatrix<f64>) -> Result<DMatrix<f64>, ExpmError> {
    expm_detailed(method, a, None).map(|o| o.value)
}

/// `e^A` by `method` with optional eigen data and conditioning diagnostics.
pub fn expm_detailed(
    method: ExpmMethod,
    a: &DMatrix<f64>,
    hint: Option<&EigenHint>,
) -> Result<ExpmOutcome, ExpmError> {
    validate(a)?;
    let plain = |value| ExpmOutcome {
        value,
        condition: None,
        imaginary_residual: 0.0,
    };
    match method {
        ExpmMethod::Taylor => methods::taylor(a).map(plain),
        ExpmMethod::Pade => methods::pade(a).map(plain),
        ExpmMethod::ScalingSquaring => methods::scaling_squaring(a).map(plain),
        ExpmMethod::EigenDecomposition => {
            let data = match hint {
                Some(EigenHint {
                    values,
                    vectors: Some(vectors),
                }) => EigenData {
                    values: values.clone(),
                    vectors: vectors.clone(),
                },
                _ => eigen_decompose(a)?,
            };
            methods::eigen(&data)
        }
        ExpmMethod::Lagrange | ExpmMethod::Newton | ExpmMethod::Vandermonde => {
            let values = match hint {
                Some(h) => h.values.clone(),
                None => eigen_decompose(a)?.values,
            };
            if values.len() != a.nrows() {
                return Err(ExpmError::DimMismatch(values.len(), a.nrows()));
            }
            check_distinct(&values)?;
            let (value, imaginary_residual) = match method {
                ExpmMethod::Lagrange => methods::lagrange(a, &values),
                ExpmMethod::Newton => methods::newton(a, &values),
                _ => methods::vandermonde(a, &values)?,
            };
            Ok(ExpmOutcome {
                value,
                condition: None,
                imaginary_residual,
            })
        }
    }
}

fn validate(a: &DMatrix<f64>) -> Result<(), ExpmError> {
    if a.nrows() == 0 || a.nrows() != a.ncols() {
        return Err(ExpmError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(ExpmError::NonFinite);
    }
    Ok(())
}

/// Smallest pairwise distance between eigenvalues.
pub fn min_eigen_gap(values: &[Complex64]) -> f64 {
    let mut gap = f64::INFINITY;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            gap = gap.min((a - b).norm());
        }
    }
    gap
}

fn check_distinct(values: &[Complex64]) -> Result<(), ExpmError> {
    let gap = min_eigen_gap(values);
    if gap > DISTINCT_EIGENVALUE_GAP {
        Ok(())
    } else {
        Err(ExpmError::SingularInterpolation { gap })
    }
}

/// Spectral norm (largest singular value).
pub fn norm2(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0, |m, &s| m.max(s))
}

/// Maximum absolute column sum.
pub fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `‖A − B‖_F / ‖B‖_F`.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}
