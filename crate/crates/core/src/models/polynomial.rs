//! Polynomial diffusion pricing.
//!
//! The spot price is a polynomial `S = H(x)ᵀ p` in the factors, with `H` a
//! monomial basis of polynomials of degree at most `n`. The generator of the
//! factor diffusion maps this space into itself; if `G` is its matrix on the
//! basis, the futures price is `F(t, t+τ) = H(x_t)ᵀ e^{τG} p`.
//!
//! `G` is built by differentiating each basis monomial symbolically. The
//! basis is graded: `1, χ, ξ, χ², χξ, ξ², χ³, ...`, within a degree by
//! decreasing power of `χ`.

use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};

use super::{ModelError, ModelParams, StateVector};
use crate::linalg_expm::{
    condition_1, eigen_decompose, expm, expm_detailed, EigenData, EigenHint, ExpmMethod,
};

/// Eigenvector condition above which the pricer stops trusting the
/// eigen-decomposition of `G` and falls back to scaling and squaring.
pub const PRICER_EIGEN_CONDITION_LIMIT: f64 = 1e8;

/// Graded monomial basis in `(χ, ξ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    degree: u32,
    /// `(power of χ, power of ξ)` per basis element.
    exponents: Vec<(u32, u32)>,
}

impl MonomialBasis {
    pub fn new(degree: u32) -> Self {
        let mut exponents = Vec::new();
        for d in 0..=degree {
            for i in (0..=d).rev() {
                exponents.push((i, d - i));
            }
        }
        MonomialBasis { degree, exponents }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[(u32, u32)] {
        &self.exponents
    }

    pub fn index_of(&self, chi_pow: u32, xi_pow: u32) -> Option<usize> {
        self.exponents
            .iter()
            .position(|&e| e == (chi_pow, xi_pow))
    }

    /// `H(x)`.
    pub fn eval(&self, x: StateVector) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            self.exponents
                .iter()
                .map(|&(i, j)| x.chi.powi(i as i32) * x.xi.powi(j as i32)),
        )
    }

    /// Rows `∂H/∂χ`, `∂H/∂ξ`.
    pub fn gradient(&self, x: StateVector) -> (DVector<f64>, DVector<f64>) {
        let d = |p: f64, k: u32| {
            if k == 0 {
                0.0
            } else {
                k as f64 * p.powi(k as i32 - 1)
            }
        };
        let dchi = self
            .exponents
            .iter()
            .map(|&(i, j)| d(x.chi, i) * x.xi.powi(j as i32));
        let dxi = self
            .exponents
            .iter()
            .map(|&(i, j)| x.chi.powi(i as i32) * d(x.xi, j));
        (
            DVector::from_iterator(self.len(), dchi),
            DVector::from_iterator(self.len(), dxi),
        )
    }
}

/// Coordinates `(α_1, ..., α_N)` of the spot polynomial in the basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoordinateVector {
    pub alpha: Vec<f64>,
}

impl CoordinateVector {
    pub fn new(alpha: Vec<f64>) -> Self {
        CoordinateVector { alpha }
    }

    /// `e_1`: the constant polynomial 1.
    pub fn constant(n: usize) -> Self {
        let mut alpha = vec![0.0; n];
        alpha[0] = 1.0;
        CoordinateVector { alpha }
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.alpha)
    }

    fn check(&self, basis: &MonomialBasis) -> Result<(), ModelError> {
        if self.len() != basis.len() {
            return Err(ModelError::CoordinateLength {
                got: self.len(),
                want: basis.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorOptions {
    /// Include the `ρσ_χσ_ξ` off-diagonal in the diffusion matrix, so the
    /// generator matches the correlated factor dynamics. On by default for
    /// pricing; [`pd_generator_matrix`] is the diagonal form.
    #[serde(default = "yes")]
    pub correlated_diffusion: bool,
}

fn yes() -> bool {
    true
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions {
            correlated_diffusion: true,
        }
    }
}

impl GeneratorOptions {
    /// `a = diag(σ_χ², σ_ξ²)`: drivers treated as independent.
    pub const DIAGONAL: GeneratorOptions = GeneratorOptions {
        correlated_diffusion: false,
    };
}

/// Matrix of the generator on a monomial basis. Column `k` holds the
/// coordinates of `𝒢 H_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    pub g: DMatrix<f64>,
    pub degree: u32,
}

/// `𝒢f = ½ tr(a ∇²f) + bᵀ∇f` with risk-neutral drift
/// `b = (−κχ − λ_χ, μ_ξ − λ_ξ − γξ)`, applied to every basis monomial.
pub fn generator_matrix(
    params: &ModelParams,
    basis: &MonomialBasis,
    opts: GeneratorOptions,
) -> GeneratorMatrix {
    let n = basis.len();
    let a11 = params.sigma_chi * params.sigma_chi;
    let a22 = params.sigma_xi * params.sigma_xi;
    let a12 = if opts.correlated_diffusion {
        params.rho * params.sigma_chi * params.sigma_xi
    } else {
        0.0
    };
    let drift_chi = -params.lambda_chi;
    let drift_xi = params.mu_xi - params.lambda_xi;

    let mut g = DMatrix::<f64>::zeros(n, n);
    for (col, &(i, j)) in basis.exponents().iter().enumerate() {
        let (fi, fj) = (i as f64, j as f64);
        let mut add = |ci: i64, cj: i64, coef: f64| {
            if coef == 0.0 || ci < 0 || cj < 0 {
                return;
            }
            let row = basis
                .index_of(ci as u32, cj as u32)
                .expect("generator preserves degree");
            g[(row, col)] += coef;
        };
        let (i, j) = (i as i64, j as i64);
        // ½ a11 ∂²/∂χ², ½ a22 ∂²/∂ξ², a12 ∂²/∂χ∂ξ
        add(i - 2, j, 0.5 * a11 * fi * (fi - 1.0));
        add(i, j - 2, 0.5 * a22 * fj * (fj - 1.0));
        add(i - 1, j - 1, a12 * fi * fj);
        // b_χ ∂/∂χ
        add(i, j, -params.kappa * fi);
        add(i - 1, j, drift_chi * fi);
        // b_ξ ∂/∂ξ
        add(i, j, -params.gamma * fj);
        add(i, j - 1, drift_xi * fj);
    }
    GeneratorMatrix {
        g,
        degree: basis.degree(),
    }
}

/// Degree-2 generator matrix with diagonal diffusion `a = diag(σ_χ², σ_ξ²)`.
/// Pricing uses the correlated form; the two differ only in the
/// `(1, χξ)` entry, which is `ρσ_χσ_ξ` there and zero here.
pub fn pd_generator_matrix(params: &ModelParams) -> GeneratorMatrix {
    generator_matrix(params, &MonomialBasis::new(2), GeneratorOptions::DIAGONAL)
}

/// `H(x) = (1, χ, ξ, χ², χξ, ξ²)`.
pub fn pd_basis_eval(x: StateVector) -> DVector<f64> {
    MonomialBasis::new(2).eval(x)
}

pub fn pd_spot(x: StateVector, p: &CoordinateVector) -> f64 {
    pd_basis_eval(x).dot(&p.to_vector())
}

/// `H(x)ᵀ e^{τG} p`.
pub fn pd_futures_price(
    x: StateVector,
    params: &ModelParams,
    p: &CoordinateVector,
    tau: f64,
    expm_method: ExpmMethod,
) -> Result<f64, ModelError> {
    let pricer = PdPricer::new(params, p, GeneratorOptions::default(), expm_method)?;
    Ok(pricer.price(x, &pricer.loading(tau)?))
}

/// Gradient of the futures price with respect to `(χ, ξ)`.
pub fn pd_measurement_row_jacobian(
    x: StateVector,
    params: &ModelParams,
    p: &CoordinateVector,
    tau: f64,
) -> Result<Vector2<f64>, ModelError> {
    let pricer = PdPricer::new(params, p, GeneratorOptions::default(), ExpmMethod::default())?;
    Ok(pricer.gradient(x, &pricer.loading(tau)?))
}

/// Prices many tenors for one parameter set. With the eigen-decomposition
/// method `G` is decomposed once and reused for every `τ`.
#[derive(Debug, Clone)]
pub struct PdPricer {
    basis: MonomialBasis,
    g: DMatrix<f64>,
    p: DVector<f64>,
    method: ExpmMethod,
    eigen: Option<EigenData>,
}

impl PdPricer {
    pub fn new(
        params: &ModelParams,
        p: &CoordinateVector,
        opts: GeneratorOptions,
        method: ExpmMethod,
    ) -> Result<Self, ModelError> {
        let basis = MonomialBasis::new(2);
        p.check(&basis)?;
        let g = generator_matrix(params, &basis, opts).g;
        let mut method = method;
        let eigen = if method == ExpmMethod::EigenDecomposition {
            let data = eigen_decompose(&g)?;
            if condition_1(&data.vectors).0 > PRICER_EIGEN_CONDITION_LIMIT {
                // Near-coincident rates, e.g. κ ≈ γ.
                method = ExpmMethod::ScalingSquaring;
                None
            } else {
                Some(data)
            }
        } else {
            None
        };
        Ok(PdPricer {
            basis,
            g,
            p: p.to_vector(),
            method,
            eigen,
        })
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    /// The method actually used, after any fallback.
    pub fn method(&self) -> ExpmMethod {
        self.method
    }

    /// `q(τ) = e^{τG} p`, so that the price is `H(x)ᵀ q(τ)`.
    pub fn loading(&self, tau: f64) -> Result<DVector<f64>, ModelError> {
        let tg = &self.g * tau;
        let e = match &self.eigen {
            Some(data) => {
                let hint = EigenHint {
                    values: data.values.iter().map(|l| l * tau).collect(),
                    vectors: Some(data.vectors.clone()),
                };
                expm_detailed(ExpmMethod::EigenDecomposition, &tg, Some(&hint))?.value
            }
            None => expm(self.method, &tg)?,
        };
        Ok(e * &self.p)
    }

    pub fn loadings(&self, tenors: &[f64]) -> Result<Vec<DVector<f64>>, ModelError> {
        tenors.iter().map(|&t| self.loading(t)).collect()
    }

    pub fn price(&self, x: StateVector, q: &DVector<f64>) -> f64 {
        self.basis.eval(x).dot(q)
    }

    pub fn gradient(&self, x: StateVector, q: &DVector<f64>) -> Vector2<f64> {
        let (dchi, dxi) = self.basis.gradient(x);
        Vector2::new(dchi.dot(q), dxi.dot(q))
    }
}
