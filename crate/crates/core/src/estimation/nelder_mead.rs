//! Nelder-Mead simplex search with dimension-adaptive coefficients
//! (reflection 1, expansion 1 + 2/n, contraction 0.75 − 1/(2n),
//! shrink 1 − 1/n) and restarts from the best vertex.

/// Stopping rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmOptions {
    pub max_evals: usize,
    /// Spread of objective values across the simplex, relative to
    /// `max(1, |f_best|)`.
    pub f_tol: f64,
    /// Largest vertex distance from the best vertex (max norm).
    pub x_tol: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Fresh simplices built around the best point after convergence.
    pub max_restarts: usize,
    /// Record the best value every this many evaluations.
    pub trace_every: usize,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions {
            max_evals: 5000,
            f_tol: 1e-10,
            x_tol: 1e-8,
            initial_step: 0.2,
            max_restarts: 3,
            trace_every: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub initial_f: f64,
    pub evals: usize,
    pub restarts: usize,
    pub converged: bool,
    /// `(evaluations so far, best value)`.
    pub trace: Vec<(usize, f64)>,
}

struct Counter<'a, F> {
    f: &'a F,
    evals: usize,
    best: f64,
    trace_every: usize,
    trace: Vec<(usize, f64)>,
}

impl<F: Fn(&[f64]) -> f64> Counter<'_, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        let v = (self.f)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        self.evals += 1;
        if v < self.best {
            self.best = v;
        }
        if self.trace_every > 0 && self.evals % self.trace_every == 0 {
            self.trace.push((self.evals, self.best));
        }
        v
    }
}

/// Minimizes `f` from `x0`. `NaN` values count as `+∞`.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], opts: &NmOptions) -> NmResult {
    let mut c = Counter {
        f,
        evals: 0,
        best: f64::INFINITY,
        trace_every: opts.trace_every,
        trace: Vec::new(),
    };
    let initial_f = c.eval(x0);
    if x0.is_empty() {
        return NmResult {
            x: Vec::new(),
            f: initial_f,
            initial_f,
            evals: 1,
            restarts: 0,
            converged: true,
            trace: vec![(1, initial_f)],
        };
    }
    let mut x = x0.to_vec();
    let mut fx = initial_f;
    let mut restarts = 0;
    let mut converged;
    loop {
        let (xb, fb, conv) = run_simplex(&mut c, &x, fx, opts);
        let improved = fb < fx - opts.f_tol * fx.abs().max(1.0);
        x = xb;
        fx = fb;
        converged = conv;
        if !conv || !improved || restarts >= opts.max_restarts || c.evals >= opts.max_evals {
            break;
        }
        restarts += 1;
    }
    c.trace.push((c.evals, fx));
    NmResult {
        x,
        f: fx,
        initial_f,
        evals: c.evals,
        restarts,
        converged,
        trace: c.trace,
    }
}

fn run_simplex<F: Fn(&[f64]) -> f64>(
    c: &mut Counter<'_, F>,
    x0: &[f64],
    f0: f64,
    opts: &NmOptions,
) -> (Vec<f64>, f64, bool) {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    let mut vals = vec![f0];
    for i in 0..n {
        if c.evals >= opts.max_evals {
            return (x0.to_vec(), f0, false);
        }
        let mut p = x0.to_vec();
        p[i] += opts.initial_step;
        vals.push(c.eval(&p));
        pts.push(p);
    }

    loop {
        // Stable sort keeps the lower index first on ties.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = (vals[n] - vals[0]) / vals[0].abs().max(1.0);
        let size = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if vals[0].is_finite() && spread <= opts.f_tol && size <= opts.x_tol {
            return (pts[0].clone(), vals[0], true);
        }
        if vals[0].is_finite() && spread <= opts.f_tol * 1e-3 {
            return (pts[0].clone(), vals[0], true);
        }
        if c.evals >= opts.max_evals {
            return (pts[0].clone(), vals[0], false);
        }

        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            for (cj, pj) in centroid.iter_mut().zip(p) {
                *cj += pj / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(cj, wj)| cj + t * (cj - wj))
                .collect()
        };

        let xr = along(alpha);
        let fr = c.eval(&xr);
        if fr < vals[0] {
            let xe = along(alpha * beta);
            let fe = c.eval(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let outside = fr < vals[n];
        let xc = if outside { along(alpha * gamma) } else { along(-gamma) };
        let fc = c.eval(&xc);
        let accept = if outside { fc <= fr } else { fc < vals[n] };
        if accept {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        let best = pts[0].clone();
        for i in 1..=n {
            if c.evals >= opts.max_evals {
                break;
            }
            for (pj, bj) in pts[i].iter_mut().zip(&best) {
                *pj = bj + delta * (*pj - bj);
            }
            vals[i] = c.eval(&pts[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2);
        let r = minimize(&f, &[5.0, 5.0], &NmOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] + 2.0).abs() < 1e-4);
        assert!(r.f <= r.initial_f);
    }

    #[test]
    fn rosenbrock_four_dims() {
        let opts = NmOptions {
            max_evals: 20000,
            ..NmOptions::default()
        };
        let r = minimize(&rosenbrock, &[-1.2, 1.0, -0.5, 0.8], &opts);
        assert!(r.f < 1e-8, "f = {}", r.f);
    }

    #[test]
    fn infinite_region_is_avoided() {
        let f = |x: &[f64]| {
            if x[0] < 0.5 {
                f64::INFINITY
            } else {
                (x[0] - 1.0).powi(2)
            }
        };
        let r = minimize(&f, &[3.0], &NmOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn budget_is_respected() {
        let opts = NmOptions {
            max_evals: 50,
            ..NmOptions::default()
        };
        let r = minimize(&rosenbrock, &[-1.2, 1.0, 0.3], &opts);
        assert!(r.evals <= 50 + 3);
        assert!(!r.converged);
    }

    #[test]
    fn empty_problem() {
        let r = minimize(&|_: &[f64]| 4.0, &[], &NmOptions::default());
        assert_eq!((r.f, r.evals), (4.0, 1));
    }
}
