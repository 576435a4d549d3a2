//! Random test matrices with known exponentials, and the
//! stability / accuracy / timing comparison of the seven methods.
//!
//! A test matrix is assembled as `A = U diag(Λ) U⁻¹` with `Λ ~ N(0, sd²)`
//! i.i.d. and `U` a Gaussian matrix with unit-norm columns, so the exact
//! exponential `U diag(e^Λ) U⁻¹` is known by construction.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{expm, expm_detailed, norm2, EigenHint, ExpmError, ExpmMethod};
use crate::rng::{self, Purpose};

/// Eigenvalue standard deviation of the reference generator.
pub const DEFAULT_EIGEN_SD: f64 = 10.0;
/// Default relative size of the stability perturbation.
pub const DEFAULT_PERTURB_SCALE: f64 = 1e-6;

const MAX_REDRAWS: usize = 100;
const SINGULAR_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedMatrix {
    pub matrix: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// Unit-norm eigenvectors as columns.
    pub eigenvectors: DMatrix<f64>,
    /// `U diag(e^Λ) U⁻¹`.
    pub exact_exp: DMatrix<f64>,
}

impl GeneratedMatrix {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn hint(&self) -> EigenHint {
        EigenHint::real(&self.eigenvalues, Some(&self.eigenvectors))
    }
}

/// Reference generator: `dim ≥ 2`, eigenvalues `N(0, 10²)`.
pub fn generate_test_matrix(dim: usize, rng_seed: u64) -> Result<GeneratedMatrix, ExpmError> {
    let mut rng = rng::stream(rng_seed, Purpose::ExpmMatrix, 0);
    generate_test_matrix_with(dim, DEFAULT_EIGEN_SD, &mut rng)
}

pub fn generate_test_matrix_with<R: Rng + ?Sized>(
    dim: usize,
    eigen_sd: f64,
    rng: &mut R,
) -> Result<GeneratedMatrix, ExpmError> {
    if dim < 2 {
        return Err(ExpmError::InvalidArgument("test matrix dim must be >= 2"));
    }
    if !(eigen_sd > 0.0 && eigen_sd.is_finite()) {
        return Err(ExpmError::InvalidArgument("eigenvalue sd must be positive"));
    }
    let eigenvalues: Vec<f64> = (0..dim).map(|_| eigen_sd * rng::normal(rng)).collect();
    for _ in 0..MAX_REDRAWS {
        let mut u = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng::normal(rng));
        for mut col in u.column_iter_mut() {
            let n = col.norm();
            col /= n;
        }
        let Some(u_inv) = u.clone().try_inverse() else {
            continue;
        };
        if super::norm1(&u) * super::norm1(&u_inv) > SINGULAR_CONDITION {
            continue;
        }
        let lam = DVector::from_vec(eigenvalues.clone());
        let matrix = &u * DMatrix::from_diagonal(&lam) * &u_inv;
        let exact_exp = &u * DMatrix::from_diagonal(&lam.map(f64::exp)) * &u_inv;
        return Ok(GeneratedMatrix {
            matrix,
            eigenvalues,
            eigenvectors: u,
            exact_exp,
        });
    }
    Err(ExpmError::RetryExhausted(MAX_REDRAWS))
}

/// How the stability perturbation `E` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    /// i.i.d. standard normal entries rescaled to `‖E‖₂ = scale·‖A‖₂`
    /// (`‖E‖₂ = scale` when `A = 0`).
    Random { scale: f64 },
    /// `E = scale·I`. Since `I` commutes with `A`, `φ = e^scale − 1`
    /// exactly for every `A`.
    Identity { scale: f64 },
}

impl Default for Perturbation {
    fn default() -> Self {
        Perturbation::Random {
            scale: DEFAULT_PERTURB_SCALE,
        }
    }
}

impl Perturbation {
    pub fn draw<R: Rng + ?Sized>(&self, a: &DMatrix<f64>, rng: &mut R) -> DMatrix<f64> {
        let n = a.nrows();
        match *self {
            Perturbation::Identity { scale } => DMatrix::identity(n, n) * scale,
            Perturbation::Random { scale } => {
                let e = DMatrix::<f64>::from_fn(n, n, |_, _| rng::normal(rng));
                let a_norm = norm2(a);
                let target = if a_norm > 0.0 { scale * a_norm } else { scale };
                let e_norm = norm2(&e);
                e * (target / e_norm)
            }
        }
    }
}

/// `φ = ‖e^{A+E} − e^A‖₂ / ‖e^A‖₂` with a random `E` of relative size
/// `perturb_scale`, drawn from a fixed stream.
pub fn stability_metric(
    method: ExpmMethod,
    a: &DMatrix<f64>,
    perturb_scale: f64,
) -> Result<f64, ExpmError> {
    if !(perturb_scale > 0.0) {
        return Err(ExpmError::InvalidArgument("perturb_scale must be > 0"));
    }
    let mut rng = rng::stream(0, Purpose::ExpmPerturbation, 0);
    let e = Perturbation::Random {
        scale: perturb_scale,
    }
    .draw(a, &mut rng);
    stability_metric_with(method, a, &e)
}

/// `φ` for an explicit perturbation `e`.
pub fn stability_metric_with(
    method: ExpmMethod,
    a: &DMatrix<f64>,
    e: &DMatrix<f64>,
) -> Result<f64, ExpmError> {
    let base = expm(method, a)?;
    stability_from(method, a, e, &base)
}

fn stability_from(
    method: ExpmMethod,
    a: &DMatrix<f64>,
    e: &DMatrix<f64>,
    base: &DMatrix<f64>,
) -> Result<f64, ExpmError> {
    if e.shape() != a.shape() {
        return Err(ExpmError::DimMismatch(e.nrows(), a.nrows()));
    }
    let moved = expm(method, &(a + e))?;
    Ok(norm2(&(moved - base)) / norm2(base))
}

/// `ψ = Σ_ij (b_ij − c_ij)²`.
pub fn accuracy_metric(b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<f64, ExpmError> {
    if b.shape() != c.shape() {
        return Err(ExpmError::DimMismatch(b.nrows(), c.nrows()));
    }
    Ok(b.iter().zip(c.iter()).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Where the eigen-based methods get `(Λ, U)` for `e^A` from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EigenSource {
    /// The generator's eigen-data, passed as a hint.
    #[default]
    Generator,
    /// Computed from `A` by the internal eigensolver.
    Computed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub trials: usize,
    pub dim: usize,
    pub seed: u64,
    pub eigen_sd: f64,
    pub perturbation: Perturbation,
    pub eigen_source: EigenSource,
}

impl BenchOptions {
    pub fn new(trials: usize, dim: usize, seed: u64) -> Self {
        BenchOptions {
            trials,
            dim,
            seed,
            eigen_sd: DEFAULT_EIGEN_SD,
            perturbation: Perturbation::default(),
            eigen_source: EigenSource::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: ExpmMethod,
    pub mean_phi: f64,
    pub mean_psi: f64,
    /// Wall time of the `e^A` evaluations only, summed over trials.
    pub total_seconds: f64,
    /// Trials where either evaluation failed.
    pub failures: usize,
    /// Per-trial values; `NaN` marks a failed trial.
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpmBenchReport {
    pub options: BenchOptions,
    pub methods: Vec<MethodSummary>,
}

impl ExpmBenchReport {
    pub fn get(&self, method: ExpmMethod) -> &MethodSummary {
        self.methods
            .iter()
            .find(|m| m.method == method)
            .expect("every method is benchmarked")
    }
}

pub fn run_expm_benchmark(
    trials: usize,
    dim: usize,
    rng_seed: u64,
) -> Result<ExpmBenchReport, ExpmError> {
    run_expm_benchmark_with(&BenchOptions::new(trials, dim, rng_seed))
}

/// Runs every method on the same matrix stream. Trials run sequentially on
/// the calling thread so the timings are comparable.
pub fn run_expm_benchmark_with(opts: &BenchOptions) -> Result<ExpmBenchReport, ExpmError> {
    if opts.trials == 0 {
        return Err(ExpmError::InvalidArgument("trials must be >= 1"));
    }
    let k = ExpmMethod::ALL.len();
    let mut phi = vec![Vec::with_capacity(opts.trials); k];
    let mut psi = vec![Vec::with_capacity(opts.trials); k];
    let mut time = vec![Duration::ZERO; k];

    for trial in 0..opts.trials as u64 {
        let mut mrng = rng::stream(opts.seed, Purpose::ExpmMatrix, trial);
        let g = generate_test_matrix_with(opts.dim, opts.eigen_sd, &mut mrng)?;
        let mut prng = rng::stream(opts.seed, Purpose::ExpmPerturbation, trial);
        let e = opts.perturbation.draw(&g.matrix, &mut prng);

        let hint = match opts.eigen_source {
            EigenSource::Generator => Some(g.hint()),
            EigenSource::Computed => None,
        };
        for (i, method) in ExpmMethod::ALL.into_iter().enumerate() {
            let start = Instant::now();
            let base = expm_detailed(method, &g.matrix, hint.as_ref()).map(|o| o.value);
            time[i] += start.elapsed();
            let cell = base.and_then(|b| {
                let s = accuracy_metric(&b, &g.exact_exp)?;
                let f = stability_from(method, &g.matrix, &e, &b)?;
                Ok((f, s))
            });
            let (f, s) = match cell {
                Ok((f, s)) if f.is_finite() && s.is_finite() => (f, s),
                _ => (f64::NAN, f64::NAN),
            };
            phi[i].push(f);
            psi[i].push(s);
        }
    }

    let methods = ExpmMethod::ALL
        .into_iter()
        .enumerate()
        .map(|(i, method)| MethodSummary {
            method,
            mean_phi: nan_mean(&phi[i]),
            mean_psi: nan_mean(&psi[i]),
            total_seconds: time[i].as_secs_f64(),
            failures: psi[i].iter().filter(|v| v.is_nan()).count(),
            phi: std::mem::take(&mut phi[i]),
            psi: std::mem::take(&mut psi[i]),
        })
        .collect();
    Ok(ExpmBenchReport {
        options: opts.clone(),
        methods,
    })
}

fn nan_mean(v: &[f64]) -> f64 {
    let (s, n) = v
        .iter()
        .filter(|x| !x.is_nan())
        .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_matrix_reconstructs() {
        let g = generate_test_matrix(10, 7).unwrap();
        assert_eq!(g.eigenvalues.len(), 10);
        for c in g.eigenvectors.column_iter() {
            assert!((c.norm() - 1.0).abs() < 1e-14);
        }
        let lam = DMatrix::from_diagonal(&DVector::from_vec(g.eigenvalues.clone()));
        let rebuilt = &g.eigenvectors * lam * g.eigenvectors.clone().try_inverse().unwrap();
        assert!(super::super::rel_frobenius(&rebuilt, &g.matrix) < 1e-8);
    }

    #[test]
    fn trace_is_eigenvalue_sum() {
        let g = generate_test_matrix(2, 1).unwrap();
        let s: f64 = g.eigenvalues.iter().sum();
        assert!((g.matrix.trace() - s).abs() < 1e-10);
    }

    #[test]
    fn generator_rejects_small_dim() {
        assert!(matches!(
            generate_test_matrix(1, 0),
            Err(ExpmError::InvalidArgument(_))
        ));
    }

    #[test]
    fn accuracy_metric_cases() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(accuracy_metric(&c, &c).unwrap(), 0.0);
        let b = c.add_scalar(1.0);
        assert_eq!(accuracy_metric(&b, &c).unwrap(), 4.0);
        assert_eq!(
            accuracy_metric(&b, &c).unwrap(),
            accuracy_metric(&c, &b).unwrap()
        );
        let d = DMatrix::<f64>::zeros(3, 3);
        assert!(matches!(
            accuracy_metric(&c, &d),
            Err(ExpmError::DimMismatch(2, 3))
        ));
    }

    #[test]
    fn stability_of_zero_matrix_is_perturbation_size() {
        let z = DMatrix::<f64>::zeros(3, 3);
        for m in [ExpmMethod::Taylor, ExpmMethod::ScalingSquaring, ExpmMethod::Pade] {
            let phi = stability_metric(m, &z, 1e-6).unwrap();
            assert!((phi - 1e-6).abs() < 1e-11, "{m}: {phi}");
        }
        assert!(stability_metric(ExpmMethod::Taylor, &z, 0.0).is_err());
    }

    #[test]
    fn identity_perturbation_gives_e_minus_one() {
        let g = generate_test_matrix(10, 11).unwrap();
        let e = Perturbation::Identity { scale: 1.0 }.draw(&g.matrix, &mut rand::rng());
        let phi = stability_metric_with(ExpmMethod::EigenDecomposition, &g.matrix, &e).unwrap();
        assert!((phi - (1f64.exp() - 1.0)).abs() < 1e-6, "{phi}");
    }

    #[test]
    fn benchmark_rejects_zero_trials() {
        assert!(run_expm_benchmark(0, 3, 1).is_err());
    }
}
