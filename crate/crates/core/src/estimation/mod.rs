//! Maximum-likelihood estimation under the four parameter-fixing regimes.
//!
//! Free parameters are optimized in an unconstrained space:
//! `log` for κ, γ, σ_χ, σ_ξ and every σ_i, `atanh` for ρ, identity for the
//! rest. The canonical layout of the full free vector is
//!
//! ```text
//! [κ, γ, μ_ξ, σ_χ, σ_ξ, ρ, λ_χ, λ_ξ, χ_0, ξ_0, σ_1..σ_m, α_1..α_6]
//! ```
//!
//! and each regime uses the θ block (first `10 + m` entries), the α block
//! (last 6), both, or neither.

mod nelder_mead;
mod report;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filters::{
    ekf_loglik, ekf_run, kf_loglik, kf_run, pd_system, ss_linear_system, ukf_loglik, ukf_run,
    FilterError, FilterRun, StateSpaceSystem,
};
use crate::linalg_expm::ExpmMethod;
use crate::models::{CoordinateVector, ModelError, ModelKind, ModelParams};
use crate::rng::{stream, Purpose};
use crate::simulation::{Convention, FuturesPanel};

pub use nelder_mead::{minimize, NmOptions, NmResult};
pub use report::{
    recovery_report, rmse_of, rmse_report, write_estimates_csv, RecoveryReport, RecoveryRow,
    RmseReport, RECOVERY_FLAG_THRESHOLD,
};

/// Which parameter blocks are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseRegime {
    /// Everything fixed.
    Case1,
    /// θ fixed, α estimated.
    Case2,
    /// α fixed, θ estimated.
    Case3,
    /// Both estimated.
    Case4,
}

impl CaseRegime {
    pub const ALL: [CaseRegime; 4] = [
        CaseRegime::Case1,
        CaseRegime::Case2,
        CaseRegime::Case3,
        CaseRegime::Case4,
    ];

    pub fn theta_free(self) -> bool {
        matches!(self, CaseRegime::Case3 | CaseRegime::Case4)
    }

    pub fn alpha_free(self) -> bool {
        matches!(self, CaseRegime::Case2 | CaseRegime::Case4)
    }
}

impl fmt::Display for CaseRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = CaseRegime::ALL.iter().position(|c| c == self).unwrap() + 1;
        write!(f, "case{n}")
    }
}

impl FromStr for CaseRegime {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let k = s.trim().to_ascii_lowercase();
        let k = k.strip_prefix("case").unwrap_or(&k).trim_start_matches(['_', '-', ' ']);
        match k {
            "1" => Ok(CaseRegime::Case1),
            "2" => Ok(CaseRegime::Case2),
            "3" => Ok(CaseRegime::Case3),
            "4" => Ok(CaseRegime::Case4),
            _ => Err(format!("unknown regime '{s}' (expected case1..case4)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Kf,
    Ekf,
    Ukf,
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterKind::Kf => "kf",
            FilterKind::Ekf => "ekf",
            FilterKind::Ukf => "ukf",
        })
    }
}

impl FromStr for FilterKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kf" => Ok(FilterKind::Kf),
            "ekf" => Ok(FilterKind::Ekf),
            "ukf" => Ok(FilterKind::Ukf),
            _ => Err(format!("unknown filter '{s}' (expected kf, ekf or ukf)")),
        }
    }
}

/// Box on natural-scale values; anything outside scores `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bounds {
    pub rate: (f64, f64),
    pub factor_sd: (f64, f64),
    pub meas_sd: (f64, f64),
    /// `|μ_ξ|`, `|λ|`, `|χ_0|`, `|ξ_0|`.
    pub level_abs: f64,
    pub alpha_abs: f64,
    pub rho_abs: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            rate: (1e-4, 50.0),
            factor_sd: (1e-4, 20.0),
            meas_sd: (1e-6, 10.0),
            level_abs: 1e3,
            alpha_abs: 1e4,
            rho_abs: 0.9999,
        }
    }
}

impl Bounds {
    fn admits(&self, p: &ModelParams, coords: Option<&CoordinateVector>) -> bool {
        let within = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        within(p.kappa, self.rate)
            && within(p.gamma, self.rate)
            && within(p.sigma_chi, self.factor_sd)
            && within(p.sigma_xi, self.factor_sd)
            && p.rho.abs() <= self.rho_abs
            && p.meas_sd.iter().all(|&s| within(s, self.meas_sd))
            && [p.mu_xi, p.lambda_chi, p.lambda_xi, p.chi0, p.xi0]
                .iter()
                .all(|v| v.abs() <= self.level_abs)
            && coords.is_none_or(|c| c.alpha.iter().all(|a| a.abs() <= self.alpha_abs))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig {
    pub regime: CaseRegime,
    pub filter: FilterKind,
    pub model: ModelKind,
    /// Values of the fixed block (and the truths in simulation studies).
    pub params: ModelParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<CoordinateVector>,
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub bounds: Bounds,
    #[serde(default)]
    pub expm_method: ExpmMethod,
}

fn default_max_evals() -> usize {
    5000
}

fn default_starts() -> usize {
    8
}

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("every start returned an infinite objective")]
    AllStartsFailed,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Filter(#[from] FilterError),
}

impl EstimationConfig {
    pub fn new(
        regime: CaseRegime,
        filter: FilterKind,
        model: ModelKind,
        params: ModelParams,
        coords: Option<CoordinateVector>,
    ) -> Self {
        EstimationConfig {
            regime,
            filter,
            model,
            params,
            coords,
            max_evals: default_max_evals(),
            starts: default_starts(),
            seed: 0,
            bounds: Bounds::default(),
            expm_method: ExpmMethod::default(),
        }
    }

    pub fn validate(&self, panel: &FuturesPanel) -> Result<(), EstimationError> {
        let bad = |m: String| Err(EstimationError::InvalidConfig(m));
        if self.max_evals < 1 {
            return bad("max_evals must be >= 1".into());
        }
        if self.starts < 1 {
            return bad("starts must be >= 1".into());
        }
        if panel.convention != Convention::for_model(self.model) {
            return bad(format!(
                "panel convention {:?} does not match model {}",
                panel.convention, self.model
            ));
        }
        if self.params.meas_sd.len() != panel.n_contracts() {
            return bad(format!(
                "params.meas_sd has {} entries, panel has {} contracts",
                self.params.meas_sd.len(),
                panel.n_contracts()
            ));
        }
        match self.model {
            ModelKind::Ss => {
                if self.regime.alpha_free() {
                    return bad(format!("{} estimates coords, which model ss lacks", self.regime));
                }
            }
            ModelKind::Pd => {
                if self.filter == FilterKind::Kf {
                    return bad("model pd is nonlinear; use ekf or ukf".into());
                }
                match &self.coords {
                    Some(c) if c.len() == 6 => {}
                    Some(c) => return bad(format!("coords must have 6 entries, got {}", c.len())),
                    None => return bad("model pd needs coords".into()),
                }
            }
        }
        self.params.validate()?;
        Ok(())
    }

    pub fn layout(&self, m: usize) -> Layout {
        Layout {
            theta: self.regime.theta_free(),
            alpha: self.regime.alpha_free() && self.model == ModelKind::Pd,
            m,
        }
    }
}

/// Which blocks of the canonical vector are free.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub theta: bool,
    pub alpha: bool,
    /// Number of contracts.
    pub m: usize,
}

const THETA_NAMES: [&str; 10] = [
    "kappa",
    "gamma",
    "mu_xi",
    "sigma_chi",
    "sigma_xi",
    "rho",
    "lambda_chi",
    "lambda_xi",
    "chi0",
    "xi0",
];

impl Layout {
    pub fn len(&self) -> usize {
        let t = if self.theta { 10 + self.m } else { 0 };
        t + if self.alpha { 6 } else { 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.theta {
            out.extend(THETA_NAMES.iter().map(|s| s.to_string()));
            out.extend((1..=self.m).map(|i| format!("sigma_{i}")));
        }
        if self.alpha {
            out.extend((1..=6).map(|i| format!("alpha_{i}")));
        }
        out
    }

    /// Transformed free vector.
    pub fn pack(&self, p: &ModelParams, coords: Option<&CoordinateVector>) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.len());
        if self.theta {
            z.extend([
                p.kappa.ln(),
                p.gamma.ln(),
                p.mu_xi,
                p.sigma_chi.ln(),
                p.sigma_xi.ln(),
                p.rho.atanh(),
                p.lambda_chi,
                p.lambda_xi,
                p.chi0,
                p.xi0,
            ]);
            z.extend(p.meas_sd.iter().map(|s| s.ln()));
        }
        if self.alpha {
            z.extend(coords.map_or(vec![0.0; 6], |c| c.alpha.clone()));
        }
        z
    }

    /// Natural-scale parameters, taking the fixed block from `fixed`.
    pub fn unpack(
        &self,
        z: &[f64],
        fixed: &ModelParams,
        fixed_coords: Option<&CoordinateVector>,
    ) -> (ModelParams, Option<CoordinateVector>) {
        assert_eq!(z.len(), self.len(), "free vector length");
        let mut p = fixed.clone();
        let mut k = 0;
        if self.theta {
            p.kappa = z[0].exp();
            p.gamma = z[1].exp();
            p.mu_xi = z[2];
            p.sigma_chi = z[3].exp();
            p.sigma_xi = z[4].exp();
            p.rho = z[5].tanh();
            p.lambda_chi = z[6];
            p.lambda_xi = z[7];
            p.chi0 = z[8];
            p.xi0 = z[9];
            p.meas_sd = z[10..10 + self.m].iter().map(|v| v.exp()).collect();
            k = 10 + self.m;
        }
        let coords = if self.alpha {
            Some(CoordinateVector::new(z[k..k + 6].to_vec()))
        } else {
            fixed_coords.cloned()
        };
        (p, coords)
    }
}

fn build_system(
    model: ModelKind,
    params: &ModelParams,
    coords: Option<&CoordinateVector>,
    panel: &FuturesPanel,
    method: ExpmMethod,
) -> Result<StateSpaceSystem, ModelError> {
    match model {
        ModelKind::Ss => Ok(ss_linear_system(params, &panel.tenors, panel.dt)?.to_state_space()),
        ModelKind::Pd => pd_system(
            params,
            coords.ok_or(ModelError::CoordinateLength { got: 0, want: 6 })?,
            &panel.tenors,
            panel.dt,
            method,
        ),
    }
}

/// Full filter output at natural-scale parameters.
pub fn run_filter(
    cfg: &EstimationConfig,
    params: &ModelParams,
    coords: Option<&CoordinateVector>,
    panel: &FuturesPanel,
) -> Result<FilterRun, EstimationError> {
    let obs = &panel.observations;
    Ok(match cfg.filter {
        FilterKind::Kf => match cfg.model {
            ModelKind::Ss => kf_run(&ss_linear_system(params, &panel.tenors, panel.dt)?, obs)?,
            ModelKind::Pd => {
                return Err(EstimationError::InvalidConfig("kf needs model ss".into()))
            }
        },
        FilterKind::Ekf => ekf_run(&build_system(cfg.model, params, coords, panel, cfg.expm_method)?, obs)?,
        FilterKind::Ukf => ukf_run(&build_system(cfg.model, params, coords, panel, cfg.expm_method)?, obs)?,
    })
}

fn loglik_at(
    cfg: &EstimationConfig,
    params: &ModelParams,
    coords: Option<&CoordinateVector>,
    panel: &FuturesPanel,
) -> Option<f64> {
    let obs = &panel.observations;
    let ll = match cfg.filter {
        FilterKind::Kf => {
            if cfg.model != ModelKind::Ss {
                return None;
            }
            kf_loglik(&ss_linear_system(params, &panel.tenors, panel.dt).ok()?, obs).ok()?
        }
        FilterKind::Ekf => ekf_loglik(
            &build_system(cfg.model, params, coords, panel, cfg.expm_method).ok()?,
            obs,
        )
        .ok()?,
        FilterKind::Ukf => ukf_loglik(
            &build_system(cfg.model, params, coords, panel, cfg.expm_method).ok()?,
            obs,
        )
        .ok()?,
    };
    ll.is_finite().then_some(ll)
}

/// `−log L` at the transformed free vector `z`; `+∞` wherever the
/// parameters are invalid, out of bounds, or the filter fails.
pub fn negative_loglik(z: &[f64], cfg: &EstimationConfig, panel: &FuturesPanel) -> f64 {
    let layout = cfg.layout(panel.n_contracts());
    if z.len() != layout.len() || z.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let (p, c) = layout.unpack(z, &cfg.params, cfg.coords.as_ref());
    if p.validate().is_err() || !cfg.bounds.admits(&p, c.as_ref()) {
        return f64::INFINITY;
    }
    loglik_at(cfg, &p, c.as_ref(), panel).map_or(f64::INFINITY, |ll| -ll)
}

/// `−log L` at natural-scale values, rejecting `κ ≤ 0` and the like.
pub fn negative_loglik_natural(
    cfg: &EstimationConfig,
    params: &ModelParams,
    coords: Option<&CoordinateVector>,
    panel: &FuturesPanel,
) -> f64 {
    if params.validate().is_err() {
        return f64::INFINITY;
    }
    loglik_at(cfg, params, coords, panel).map_or(f64::INFINITY, |ll| -ll)
}

/// Neutral first start: κ = γ = 1, σ = 0.5, ρ = 0, λ = μ_ξ = 0, χ_0 = 0,
/// ξ_0 = 0 (the mean first-row observation for log prices) and
/// α = (panel mean, 0, ..., 0).
pub fn neutral_start(panel: &FuturesPanel) -> (ModelParams, CoordinateVector) {
    let m = panel.n_contracts();
    let xi0 = match panel.convention {
        Convention::LogPrice => panel.observations.row(0).mean(),
        Convention::RawPrice => 0.0,
    };
    let p = ModelParams {
        kappa: 1.0,
        gamma: 1.0,
        mu_xi: 0.0,
        sigma_chi: 0.5,
        sigma_xi: 0.5,
        rho: 0.0,
        lambda_chi: 0.0,
        lambda_xi: 0.0,
        meas_sd: vec![0.5; m],
        chi0: 0.0,
        xi0,
    };
    let mut alpha = vec![0.0; 6];
    alpha[0] = panel.observations.mean();
    (p, CoordinateVector::new(alpha))
}

/// Start `k` in transformed space. Start 0 is the neutral point; later
/// starts add seed-derived uniform offsets: ±1.5 on log-scale entries,
/// ±10% of the panel level on α_1 and ±1 elsewhere.
pub fn start_point(cfg: &EstimationConfig, panel: &FuturesPanel, k: usize) -> Vec<f64> {
    let layout = cfg.layout(panel.n_contracts());
    let (p0, c0) = neutral_start(panel);
    let mut z = layout.pack(&p0, Some(&c0));
    if k == 0 {
        return z;
    }
    let mut rng = stream(cfg.seed, Purpose::MultistartPoint, k as u64);
    let scale = panel.observations.mean().abs().max(1.0);
    let mut i = 0;
    if layout.theta {
        for j in 0..10 + layout.m {
            let log_scale = matches!(j, 0 | 1 | 3 | 4) || j >= 10;
            let w = if log_scale { 1.5 } else { 1.0 };
            z[j] += rng.random_range(-w..w);
        }
        i = 10 + layout.m;
    }
    if layout.alpha {
        for j in 0..6 {
            z[i + j] += rng.random_range(-1.0..1.0) * if j == 0 { 0.1 * scale } else { 1.0 };
        }
    }
    z
}

/// One start's outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartSummary {
    pub index: usize,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub evals: usize,
    pub restarts: usize,
    pub converged: bool,
    pub trace: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub params: ModelParams,
    pub coords: Option<CoordinateVector>,
    /// Names and transformed values of the free block.
    pub free_names: Vec<String>,
    pub free: Vec<f64>,
    pub loglik: f64,
    pub rmse: RmseReport,
    /// `n × 2` filtered `(χ, ξ)`.
    pub filtered_states: DMatrix<f64>,
    pub starts: Vec<StartSummary>,
    pub best_start: usize,
    pub total_evals: usize,
}

/// Multistart Nelder-Mead over the free block. Starts run in parallel;
/// the best objective wins, ties going to the lowest start index.
pub fn fit(cfg: &EstimationConfig, panel: &FuturesPanel) -> Result<EstimationResult, EstimationError> {
    panel
        .validate()
        .map_err(|e| EstimationError::InvalidConfig(e.to_string()))?;
    cfg.validate(panel)?;
    let layout = cfg.layout(panel.n_contracts());
    let n_starts = if layout.is_empty() { 1 } else { cfg.starts };
    let opts = NmOptions {
        max_evals: cfg.max_evals,
        ..NmOptions::default()
    };
    let objective = |z: &[f64]| negative_loglik(z, cfg, panel);

    let runs: Vec<(Vec<f64>, NmResult)> = (0..n_starts)
        .into_par_iter()
        .map(|k| {
            let z0 = if layout.is_empty() {
                Vec::new()
            } else {
                start_point(cfg, panel, k)
            };
            let r = minimize(&objective, &z0, &opts);
            (z0, r)
        })
        .collect();

    let mut best = 0;
    for (k, (_, r)) in runs.iter().enumerate() {
        if r.f < runs[best].1.f {
            best = k;
        }
    }
    let best_f = runs[best].1.f;
    if !best_f.is_finite() {
        return Err(EstimationError::AllStartsFailed);
    }
    let z = runs[best].1.x.clone();
    let (params, coords) = layout.unpack(&z, &cfg.params, cfg.coords.as_ref());
    let run = run_filter(cfg, &params, coords.as_ref(), panel)?;
    let starts = runs
        .iter()
        .enumerate()
        .map(|(k, (_, r))| StartSummary {
            index: k,
            initial_objective: r.initial_f,
            final_objective: r.f,
            evals: r.evals,
            restarts: r.restarts,
            converged: r.converged,
            trace: r.trace.clone(),
        })
        .collect::<Vec<_>>();
    Ok(EstimationResult {
        params,
        coords,
        free_names: layout.names(),
        free: z,
        loglik: run.loglik,
        rmse: rmse_report(panel, &run),
        filtered_states: run.filtered_states(),
        total_evals: starts.iter().map(|s| s.evals).sum(),
        starts,
        best_start: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{reference_config, reference_coords, reference_params, simulate_panel};

    fn small_pd_panel() -> FuturesPanel {
        let mut cfg = reference_config(ModelKind::Pd, 3, 4);
        cfg.n_obs = 60;
        simulate_panel(&cfg).unwrap()
    }

    fn pd_cfg(regime: CaseRegime) -> EstimationConfig {
        EstimationConfig::new(
            regime,
            FilterKind::Ekf,
            ModelKind::Pd,
            reference_params(3),
            Some(reference_coords()),
        )
    }

    #[test]
    fn regime_parsing_and_blocks() {
        assert_eq!("case3".parse::<CaseRegime>().unwrap(), CaseRegime::Case3);
        assert_eq!("4".parse::<CaseRegime>().unwrap(), CaseRegime::Case4);
        assert!("case5".parse::<CaseRegime>().is_err());
        assert_eq!(CaseRegime::Case2.to_string(), "case2");
        assert!(CaseRegime::Case4.theta_free() && CaseRegime::Case4.alpha_free());
        assert!(!CaseRegime::Case1.theta_free() && !CaseRegime::Case1.alpha_free());
    }

    #[test]
    fn layout_lengths_and_names() {
        for (r, want) in [
            (CaseRegime::Case1, 0),
            (CaseRegime::Case2, 6),
            (CaseRegime::Case3, 23),
            (CaseRegime::Case4, 29),
        ] {
            let l = pd_cfg(r).layout(13);
            assert_eq!(l.len(), want);
            assert_eq!(l.names().len(), want);
        }
        let names = pd_cfg(CaseRegime::Case4).layout(2).names();
        assert_eq!(names[0], "kappa");
        assert_eq!(names[10], "sigma_1");
        assert_eq!(names[12], "alpha_1");
    }

    #[test]
    fn pack_unpack_round_trip() {
        let l = pd_cfg(CaseRegime::Case4).layout(3);
        let p = reference_params(3);
        let c = reference_coords();
        let z = l.pack(&p, Some(&c));
        let (p2, c2) = l.unpack(&z, &reference_params(3), None);
        assert!((p2.kappa - p.kappa).abs() < 1e-15);
        assert!((p2.rho - p.rho).abs() < 1e-15);
        assert!((p2.meas_sd[2] - p.meas_sd[2]).abs() < 1e-15);
        assert_eq!(c2.unwrap(), c);
    }

    #[test]
    fn case1_objective_is_truth_loglik() {
        let panel = small_pd_panel();
        let cfg = pd_cfg(CaseRegime::Case1);
        let v = negative_loglik(&[], &cfg, &panel);
        let run = run_filter(&cfg, &cfg.params, cfg.coords.as_ref(), &panel).unwrap();
        assert_eq!(v, -run.loglik);
    }

    #[test]
    fn invalid_natural_values_are_infinite() {
        let panel = small_pd_panel();
        let cfg = pd_cfg(CaseRegime::Case3);
        let mut p = reference_params(3);
        p.kappa = -0.1;
        assert_eq!(
            negative_loglik_natural(&cfg, &p, cfg.coords.as_ref(), &panel),
            f64::INFINITY
        );
        let mut z = cfg.layout(3).pack(&reference_params(3), None);
        z[0] = 10.0; // κ = e^10 is outside the default box
        assert_eq!(negative_loglik(&z, &cfg, &panel), f64::INFINITY);
        assert_eq!(negative_loglik(&[0.0], &cfg, &panel), f64::INFINITY);
    }

    #[test]
    fn config_mismatches_are_reported() {
        let panel = small_pd_panel();
        let mut cfg = pd_cfg(CaseRegime::Case3);
        cfg.model = ModelKind::Ss;
        assert!(matches!(cfg.validate(&panel), Err(EstimationError::InvalidConfig(_))));
        let mut cfg = pd_cfg(CaseRegime::Case3);
        cfg.filter = FilterKind::Kf;
        assert!(cfg.validate(&panel).is_err());
        let mut cfg = pd_cfg(CaseRegime::Case3);
        cfg.starts = 0;
        assert!(cfg.validate(&panel).is_err());
    }

    #[test]
    fn start_points_are_deterministic() {
        let panel = small_pd_panel();
        let cfg = pd_cfg(CaseRegime::Case4);
        assert_eq!(start_point(&cfg, &panel, 3), start_point(&cfg, &panel, 3));
        assert_ne!(start_point(&cfg, &panel, 1), start_point(&cfg, &panel, 2));
        let z0 = start_point(&cfg, &panel, 0);
        assert_eq!(z0[0], 0.0);
        assert!((z0[3] - 0.5f64.ln()).abs() < 1e-15);
    }
}
