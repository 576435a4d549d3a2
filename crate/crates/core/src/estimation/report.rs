//! RMSE and parameter-recovery tables.

use nalgebra::DVector;

use super::EstimationResult;
use crate::filters::FilterRun;
use crate::fmt_f64;
use crate::models::{CoordinateVector, ModelParams};
use crate::simulation::FuturesPanel;

/// Rows with `|relative error|` above this are flagged.
pub const RECOVERY_FLAG_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct RmseReport {
    pub per_contract: Vec<f64>,
    pub mean: f64,
}

impl RmseReport {
    /// `contract,tenor_months,rmse`, one row per contract and a final
    /// `mean` row.
    pub fn to_csv(&self, tenors: &[f64]) -> String {
        let mut out = String::from("contract,tenor_months,rmse\n");
        for (i, r) in self.per_contract.iter().enumerate() {
            let months = tenors.get(i).map_or(String::new(), |t| fmt_f64(t * 12.0));
            out.push_str(&format!("{},{},{}\n", i + 1, months, fmt_f64(*r)));
        }
        out.push_str(&format!("mean,,{}\n", fmt_f64(self.mean)));
        out
    }
}

/// Per-column root mean square of `y_t − fit_t`.
pub fn rmse_of(panel: &FuturesPanel, fits: &[DVector<f64>]) -> RmseReport {
    let (n, m) = (panel.n_obs(), panel.n_contracts());
    let per_contract: Vec<f64> = (0..m)
        .map(|i| {
            let ss: f64 = (0..n)
                .map(|t| (panel.observations[(t, i)] - fits[t][i]).powi(2))
                .sum();
            (ss / n as f64).sqrt()
        })
        .collect();
    let mean = per_contract.iter().sum::<f64>() / m as f64;
    RmseReport { per_contract, mean }
}

/// RMSE of the filtered fit `h(a_t)`.
pub fn rmse_report(panel: &FuturesPanel, run: &FilterRun) -> RmseReport {
    rmse_of(panel, &run.fitted_updated)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryRow {
    pub name: String,
    pub truth: f64,
    pub estimate: f64,
    pub abs_error: f64,
    /// `NaN` when the truth is zero.
    pub rel_error: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub rows: Vec<RecoveryRow>,
}

impl RecoveryReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,true,estimate,abs_error,rel_error,flag\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.name,
                fmt_f64(r.truth),
                fmt_f64(r.estimate),
                fmt_f64(r.abs_error),
                fmt_f64(r.rel_error),
                u8::from(r.flagged)
            ));
        }
        out
    }

    pub fn get(&self, name: &str) -> Option<&RecoveryRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &RecoveryRow> {
        self.rows.iter().filter(|r| r.flagged)
    }
}

fn named_values(p: &ModelParams, c: Option<&CoordinateVector>) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = [
        ("kappa", p.kappa),
        ("gamma", p.gamma),
        ("mu_xi", p.mu_xi),
        ("sigma_chi", p.sigma_chi),
        ("sigma_xi", p.sigma_xi),
        ("rho", p.rho),
        ("lambda_chi", p.lambda_chi),
        ("lambda_xi", p.lambda_xi),
        ("chi0", p.chi0),
        ("xi0", p.xi0),
    ]
    .iter()
    .map(|(n, v)| (n.to_string(), *v))
    .collect();
    out.extend(
        p.meas_sd
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("sigma_{}", i + 1), *v)),
    );
    if let Some(c) = c {
        out.extend(
            c.alpha
                .iter()
                .enumerate()
                .map(|(i, v)| (format!("alpha_{}", i + 1), *v)),
        );
    }
    out
}

/// `name,value` for every natural-scale parameter of the result.
pub fn write_estimates_csv(result: &EstimationResult) -> String {
    let mut out = String::from("name,value\n");
    for (n, v) in named_values(&result.params, result.coords.as_ref()) {
        out.push_str(&format!("{n},{}\n", fmt_f64(v)));
    }
    out
}

/// Truth against estimate for every parameter, flagging
/// `|rel err| > 0.5`.
pub fn recovery_report(
    result: &EstimationResult,
    truth: &ModelParams,
    truth_coords: Option<&CoordinateVector>,
) -> RecoveryReport {
    recovery_between(
        &result.params,
        result.coords.as_ref(),
        truth,
        truth_coords,
    )
}

pub(crate) fn recovery_between(
    est: &ModelParams,
    est_coords: Option<&CoordinateVector>,
    truth: &ModelParams,
    truth_coords: Option<&CoordinateVector>,
) -> RecoveryReport {
    let est_v = named_values(est, est_coords);
    let truth_v = named_values(truth, truth_coords);
    let rows = truth_v
        .into_iter()
        .zip(est_v)
        .map(|((name, t), (_, e))| {
            let abs_error = (e - t).abs();
            let rel_error = if t != 0.0 { abs_error / t.abs() } else { f64::NAN };
            RecoveryRow {
                name,
                truth: t,
                estimate: e,
                abs_error,
                rel_error,
                flagged: rel_error > RECOVERY_FLAG_THRESHOLD,
            }
        })
        .collect();
    RecoveryReport { rows }
}
