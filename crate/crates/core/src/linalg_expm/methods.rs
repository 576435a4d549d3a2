use nalgebra::DMatrix;
use num_complex::Complex64;

use super::eigen::{condition_1, EigenData};
use super::{norm1, ExpmError, ExpmMethod, ExpmOutcome};

const TAYLOR_MAX_TERMS: usize = 200;
const TAYLOR_REL_STOP: f64 = 1e-16;
const PADE_DEGREE: usize = 6;

/// Truncated power series, stopping once the next term is negligible
/// against the partial sum.
pub(super) fn taylor(a: &DMatrix<f64>) -> Result<DMatrix<f64>, ExpmError> {
    let n = a.nrows();
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = sum.clone();
    for k in 1..=TAYLOR_MAX_TERMS {
        term = (a * &term) / k as f64;
        if !term.iter().all(|v| v.is_finite()) {
            break;
        }
        sum += &term;
        if term.norm() < TAYLOR_REL_STOP * sum.norm() {
            return Ok(sum);
        }
    }
    Err(ExpmError::NonConvergent {
        method: ExpmMethod::Taylor,
        terms: TAYLOR_MAX_TERMS,
    })
}

fn pade_coefficients(q: usize) -> Vec<f64> {
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    (0..=q)
        .map(|k| fact(2 * q - k) * fact(q) / (fact(2 * q) * fact(k) * fact(q - k)))
        .collect()
}

/// Diagonal (6,6) Padé approximant applied directly to `a`.
pub(super) fn pade(a: &DMatrix<f64>) -> Result<DMatrix<f64>, ExpmError> {
    let n = a.nrows();
    let c = pade_coefficients(PADE_DEGREE);
    let mut num = DMatrix::<f64>::identity(n, n) * c[0];
    let mut den = num.clone();
    let mut power = DMatrix::<f64>::identity(n, n);
    for (k, &ck) in c.iter().enumerate().skip(1) {
        power = &power * a;
        num += &power * ck;
        if k % 2 == 0 {
            den += &power * ck;
        } else {
            den -= &power * ck;
        }
    }
    let out = den
        .lu()
        .solve(&num)
        .ok_or(ExpmError::SingularSystem("Padé denominator"))?;
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(ExpmError::SingularSystem("Padé denominator"))
    }
}

/// Padé core on `a / 2^s` followed by `s` squarings, with
/// `s = max(0, ⌈log₂ ‖a‖₁⌉)`.
pub(super) fn scaling_squaring(a: &DMatrix<f64>) -> Result<DMatrix<f64>, ExpmError> {
    let nrm = norm1(a);
    let s = if nrm > 1.0 {
        nrm.log2().ceil() as i32
    } else {
        0
    };
    let mut x = pade(&(a / 2f64.powi(s)))?;
    for _ in 0..s {
        x = &x * &x;
    }
    Ok(x)
}

pub(super) fn eigen(data: &EigenData) -> Result<ExpmOutcome, ExpmError> {
    let (condition, inv) = condition_1(&data.vectors);
    let inv = inv.ok_or(ExpmError::SingularSystem("eigenvector matrix"))?;
    let mut scaled = data.vectors.clone();
    for (k, &l) in data.values.iter().enumerate() {
        let e = l.exp();
        scaled.column_mut(k).iter_mut().for_each(|z| *z *= e);
    }
    let (value, imaginary_residual) = split(&(scaled * inv));
    Ok(ExpmOutcome {
        value,
        condition: Some(condition),
        imaginary_residual,
    })
}

/// `Σ_i e^{λ_i} Π_{j≠i} (A − λ_j I)/(λ_i − λ_j)`.
pub(super) fn lagrange(a: &DMatrix<f64>, values: &[Complex64]) -> (DMatrix<f64>, f64) {
    let n = a.nrows();
    let ac = complexify(a);
    let eye = DMatrix::<Complex64>::identity(n, n);
    let mut total = DMatrix::<Complex64>::zeros(n, n);
    for (i, &li) in values.iter().enumerate() {
        let mut basis = eye.clone();
        for (j, &lj) in values.iter().enumerate() {
            if i != j {
                basis = (&ac - &eye * lj) * basis / (li - lj);
            }
        }
        total += basis * li.exp();
    }
    split(&total)
}

/// Newton divided-difference form, evaluated by Horner's rule on `A`.
pub(super) fn newton(a: &DMatrix<f64>, values: &[Complex64]) -> (DMatrix<f64>, f64) {
    let n = a.nrows();
    let nodes = leja_order(values);
    let coef = divided_differences(&nodes);
    let ac = complexify(a);
    let eye = DMatrix::<Complex64>::identity(n, n);
    let mut p = &eye * coef[n - 1];
    for k in (0..n - 1).rev() {
        p = (&ac - &eye * nodes[k]) * p + &eye * coef[k];
    }
    split(&p)
}

/// Solve the Vandermonde system for the monomial coefficients of the
/// interpolant, then evaluate it on `A`.
pub(super) fn vandermonde(
    a: &DMatrix<f64>,
    values: &[Complex64],
) -> Result<(DMatrix<f64>, f64), ExpmError> {
    let n = a.nrows();
    let v = DMatrix::<Complex64>::from_fn(n, n, |i, j| values[i].powu(j as u32));
    let rhs = nalgebra::DVector::<Complex64>::from_iterator(n, values.iter().map(|l| l.exp()));
    let coef = v
        .lu()
        .solve(&rhs)
        .ok_or(ExpmError::SingularSystem("Vandermonde system"))?;
    let ac = complexify(a);
    let eye = DMatrix::<Complex64>::identity(n, n);
    let mut p = &eye * coef[n - 1];
    for k in (0..n - 1).rev() {
        p = &ac * p + &eye * coef[k];
    }
    Ok(split(&p))
}

/// Divided differences `f[x_0], f[x_0,x_1], ...` of `exp` at `nodes`.
fn divided_differences(nodes: &[Complex64]) -> Vec<Complex64> {
    let n = nodes.len();
    let mut c: Vec<Complex64> = nodes.iter().map(|x| x.exp()).collect();
    for j in 1..n {
        for i in (j..n).rev() {
            c[i] = (c[i] - c[i - 1]) / (nodes[i] - nodes[i - j]);
        }
    }
    c
}

/// Leja ordering: start from the largest modulus, then repeatedly take the
/// node maximising the product of distances to the nodes already chosen.
fn leja_order(values: &[Complex64]) -> Vec<Complex64> {
    let mut rest: Vec<Complex64> = values.to_vec();
    let mut out = Vec::with_capacity(rest.len());
    let first = rest
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    out.push(rest.swap_remove(first));
    while !rest.is_empty() {
        let (idx, _) = rest
            .iter()
            .enumerate()
            .map(|(i, z)| (i, out.iter().map(|w| (z - w).norm().ln()).sum::<f64>()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        out.push(rest.swap_remove(idx));
    }
    out
}

fn complexify(a: &DMatrix<f64>) -> DMatrix<Complex64> {
    a.map(|x| Complex64::new(x, 0.0))
}

/// Real part plus the relative Frobenius size of the discarded imaginary part.
fn split(m: &DMatrix<Complex64>) -> (DMatrix<f64>, f64) {
    let re = m.map(|z| z.re);
    let im = m.map(|z| z.im).norm();
    let rn = re.norm();
    let residual = if rn > 0.0 { im / rn } else { im };
    (re, residual)
}
