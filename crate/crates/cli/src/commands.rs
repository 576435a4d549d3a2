use std::path::{Path, PathBuf};

use clap::Args;
use polyfut::estimation::{
    self, recovery_report, write_estimates_csv, CaseRegime, EstimationConfig, EstimationError,
    FilterKind, StartSummary,
};
use polyfut::fmt_f64;
use polyfut::linalg_expm::{run_expm_benchmark_with, BenchOptions, EigenSource, ExpmMethod};
use polyfut::models::{
    months_to_years, ss_log_futures, CoordinateVector, GeneratorOptions, ModelKind, PdPricer,
    StateVector,
};
use polyfut::simulation::{
    read_panel, reference_coords, reference_params, simulate_panel, write_panel, Convention,
    PanelMetadata, SimulationConfig, DEFAULT_DT,
};
use serde::Serialize;

use crate::config::{load, BenchConfig, FitConfig, PriceConfig, SimulateConfig};
use crate::output::{run_dir, write, write_json, CONFIG_FILE};
use crate::{CliError, Shared};

const DEFAULT_CONTRACTS: usize = 13;
const DEFAULT_N_OBS: usize = 1000;

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    model: Option<ModelKind>,
    /// Contracts with 1..=N months to maturity and the matching reference
    /// measurement noise.
    #[arg(long)]
    contracts: Option<usize>,
    #[arg(long)]
    n_obs: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    expm_method: Option<ExpmMethod>,
}

pub fn simulate(shared: &Shared, args: &SimulateArgs) -> Result<(), CliError> {
    let file: SimulateConfig = load(shared.config.as_deref())?;
    let model = args.model.or(file.model).unwrap_or(ModelKind::Pd);
    let tenors_months = match (args.contracts, &file.tenors_months) {
        (Some(m), _) => (1..=m).map(|i| i as f64).collect(),
        (None, Some(t)) => t.clone(),
        (None, None) => (1..=DEFAULT_CONTRACTS).map(|i| i as f64).collect(),
    };
    let m = tenors_months.len();
    let params = file.params.clone().unwrap_or_else(|| reference_params(m));
    let coords = match model {
        ModelKind::Pd => Some(file.coords.clone().unwrap_or_else(reference_coords)),
        ModelKind::Ss => None,
    };
    let cfg = SimulationConfig {
        n_obs: args.n_obs.or(file.n_obs).unwrap_or(DEFAULT_N_OBS),
        tenors_months,
        dt: args.dt.or(file.dt).unwrap_or(DEFAULT_DT),
        seed: shared.seed.or(file.seed).unwrap_or(0),
        model,
        params,
        coords,
        expm_method: args.expm_method.or(file.expm_method).unwrap_or_default(),
    };
    cfg.validate().map_err(config_err)?;
    let panel = simulate_panel(&cfg).map_err(config_err)?;

    let dir = run_dir(shared.out.as_deref(), "simulate")?;
    let meta = PanelMetadata::from_config(&cfg);
    write_panel(&dir.join("panel.csv"), &panel, &meta).map_err(config_err)?;
    let echo = SimulateConfig {
        n_obs: Some(cfg.n_obs),
        tenors_months: Some(cfg.tenors_months.clone()),
        dt: Some(cfg.dt),
        seed: Some(cfg.seed),
        model: Some(cfg.model),
        params: Some(cfg.params.clone()),
        coords: cfg.coords.clone(),
        expm_method: Some(cfg.expm_method),
    };
    write_json(&dir.join(CONFIG_FILE), &echo)?;
    println!(
        "simulated n={} m={} convention={} seed={} -> {}",
        cfg.n_obs,
        m,
        convention_name(panel.convention),
        cfg.seed,
        dir.display()
    );
    Ok(())
}

fn convention_name(c: Convention) -> &'static str {
    match c {
        Convention::LogPrice => "log_price",
        Convention::RawPrice => "raw_price",
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Panel CSV written by `simulate` (metadata JSON alongside).
    #[arg(long)]
    panel: Option<PathBuf>,
    #[arg(long)]
    regime: Option<CaseRegime>,
    #[arg(long)]
    filter: Option<FilterKind>,
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    max_evals: Option<usize>,
    #[arg(long)]
    expm_method: Option<ExpmMethod>,
}

#[derive(Serialize)]
struct RunLog<'a> {
    regime: CaseRegime,
    filter: FilterKind,
    model: ModelKind,
    loglik: f64,
    mean_rmse: f64,
    best_start: usize,
    total_evals: usize,
    free_names: &'a [String],
    free: &'a [f64],
    starts: &'a [StartSummary],
}

pub fn fit(shared: &Shared, args: &FitArgs) -> Result<(), CliError> {
    let file: FitConfig = load(shared.config.as_deref())?;
    let panel_path = args
        .panel
        .clone()
        .or(file.panel.clone())
        .ok_or_else(|| CliError::Config("no panel given (--panel or \"panel\" in the config)".into()))?;
    let (panel, meta) = read_panel(&panel_path).map_err(config_err)?;

    let model = args
        .model
        .or(file.model)
        .or(meta.model)
        .unwrap_or(match panel.convention {
            Convention::LogPrice => ModelKind::Ss,
            Convention::RawPrice => ModelKind::Pd,
        });
    // Generating values are only meaningful for the model that produced the panel.
    let truth = meta
        .params
        .clone()
        .filter(|_| meta.model.is_none_or(|m| m == model));
    let truth_coords = meta.coords.clone().filter(|_| model == ModelKind::Pd);
    let (neutral_params, neutral_coords) = estimation::neutral_start(&panel);
    let params = file
        .params
        .clone()
        .or_else(|| truth.clone())
        .unwrap_or(neutral_params);
    let coords = match model {
        ModelKind::Pd => Some(
            file.coords
                .clone()
                .or_else(|| truth_coords.clone())
                .unwrap_or(neutral_coords),
        ),
        ModelKind::Ss => None,
    };
    let filter = args.filter.or(file.filter).unwrap_or(match model {
        ModelKind::Ss => FilterKind::Kf,
        ModelKind::Pd => FilterKind::Ekf,
    });
    let regime = args.regime.or(file.regime).unwrap_or(CaseRegime::Case4);
    let mut cfg = EstimationConfig::new(regime, filter, model, params, coords);
    if let Some(v) = args.starts.or(file.starts) {
        cfg.starts = v;
    }
    if let Some(v) = args.max_evals.or(file.max_evals) {
        cfg.max_evals = v;
    }
    if let Some(v) = shared.seed.or(file.seed) {
        cfg.seed = v;
    }
    if let Some(v) = file.bounds {
        cfg.bounds = v;
    }
    if let Some(v) = args.expm_method.or(file.expm_method) {
        cfg.expm_method = v;
    }
    if cfg.starts == 0 || cfg.max_evals == 0 {
        return Err(CliError::Config("starts and max_evals must be >= 1".into()));
    }
    cfg.validate(&panel).map_err(config_err)?;

    let dir = run_dir(shared.out.as_deref(), "fit")?;
    let echo = FitConfig {
        panel: Some(panel_path.clone()),
        regime: Some(cfg.regime),
        filter: Some(cfg.filter),
        model: Some(cfg.model),
        params: Some(cfg.params.clone()),
        coords: cfg.coords.clone(),
        max_evals: Some(cfg.max_evals),
        starts: Some(cfg.starts),
        seed: Some(cfg.seed),
        bounds: Some(cfg.bounds),
        expm_method: Some(cfg.expm_method),
    };
    write_json(&dir.join(CONFIG_FILE), &echo)?;

    let result = estimation::fit(&cfg, &panel).map_err(|e| match e {
        EstimationError::InvalidConfig(m) => CliError::Config(m),
        other => CliError::Estimation(other.to_string()),
    })?;

    write(&dir.join("estimates.csv"), &write_estimates_csv(&result))?;
    write(&dir.join("rmse.csv"), &result.rmse.to_csv(&panel.tenors))?;
    if let Some(t) = &truth {
        let rep = recovery_report(&result, t, truth_coords.as_ref());
        write(&dir.join("recovery.csv"), &rep.to_csv())?;
    }
    let mut states = String::from("chi,xi\n");
    for row in result.filtered_states.row_iter() {
        states.push_str(&format!("{},{}\n", fmt_f64(row[0]), fmt_f64(row[1])));
    }
    write(&dir.join("filtered_states.csv"), &states)?;
    let log = RunLog {
        regime: cfg.regime,
        filter: cfg.filter,
        model: cfg.model,
        loglik: result.loglik,
        mean_rmse: result.rmse.mean,
        best_start: result.best_start,
        total_evals: result.total_evals,
        free_names: &result.free_names,
        free: &result.free,
        starts: &result.starts,
    };
    write_json(&dir.join("run_log.json"), &log)?;
    println!(
        "fit {} {} {}: loglik={:.6} mean_rmse={:.6} best_start={} evals={} -> {}",
        cfg.model,
        cfg.regime,
        cfg.filter,
        result.loglik,
        result.rmse.mean,
        result.best_start,
        result.total_evals,
        dir.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    /// `generator` (eigen-data of the generated matrix) or `computed`.
    #[arg(long, value_parser = parse_eigen_source)]
    eigen_source: Option<EigenSource>,
}

fn parse_eigen_source(s: &str) -> Result<EigenSource, String> {
    match s {
        "generator" => Ok(EigenSource::Generator),
        "computed" => Ok(EigenSource::Computed),
        _ => Err(format!("unknown eigen source '{s}' (generator|computed)")),
    }
}

/// `--out x.csv` names the report itself; its siblings get the same stem.
fn bench_paths(out: Option<&Path>) -> Result<(PathBuf, PathBuf, PathBuf), CliError> {
    match out {
        Some(p) if p.extension().is_some_and(|e| e == "csv") => {
            let parent = p.parent().filter(|d| !d.as_os_str().is_empty());
            let dir = run_dir(Some(parent.unwrap_or(Path::new("."))), "expm-bench")?;
            let stem = p
                .file_stem()
                .map_or("report".into(), |s| s.to_string_lossy().into_owned());
            Ok((
                p.to_path_buf(),
                dir.join(format!("{stem}_trials.csv")),
                dir.join(format!("{stem}_{CONFIG_FILE}")),
            ))
        }
        _ => {
            let dir = run_dir(out, "expm-bench")?;
            Ok((
                dir.join("report.csv"),
                dir.join("trials.csv"),
                dir.join(CONFIG_FILE),
            ))
        }
    }
}

pub fn expm_bench(shared: &Shared, args: &BenchArgs) -> Result<(), CliError> {
    let file: BenchConfig = load(shared.config.as_deref())?;
    let mut opts = BenchOptions::new(
        args.trials.or(file.trials).unwrap_or(100),
        args.dim.or(file.dim).unwrap_or(10),
        shared.seed.or(file.seed).unwrap_or(0),
    );
    if let Some(v) = file.eigen_sd {
        opts.eigen_sd = v;
    }
    if let Some(v) = file.perturbation {
        opts.perturbation = v;
    }
    if let Some(v) = args.eigen_source.or(file.eigen_source) {
        opts.eigen_source = v;
    }
    if opts.trials < 1 {
        return Err(CliError::Config(format!("trials must be >= 1, got {}", opts.trials)));
    }
    if opts.dim < 2 {
        return Err(CliError::Config(format!("dim must be >= 2, got {}", opts.dim)));
    }
    if !(opts.eigen_sd > 0.0 && opts.eigen_sd.is_finite()) {
        return Err(CliError::Config(format!("eigen_sd must be > 0, got {}", opts.eigen_sd)));
    }

    let (report_path, trials_path, config_path) = bench_paths(shared.out.as_deref())?;
    let echo = BenchConfig {
        trials: Some(opts.trials),
        dim: Some(opts.dim),
        seed: Some(opts.seed),
        eigen_sd: Some(opts.eigen_sd),
        perturbation: Some(opts.perturbation),
        eigen_source: Some(opts.eigen_source),
    };
    write_json(&config_path, &echo)?;
    let report = run_expm_benchmark_with(&opts).map_err(config_err)?;

    let mut csv = String::from("method,mean_phi,mean_psi,total_seconds,failures\n");
    let mut trials = String::from("trial,method,phi,psi\n");
    println!(
        "{:<20} {:>12} {:>12} {:>10} {:>8}",
        "method", "mean phi", "mean psi", "seconds", "failures"
    );
    for s in &report.methods {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            s.method,
            fmt_f64(s.mean_phi),
            fmt_f64(s.mean_psi),
            fmt_f64(s.total_seconds),
            s.failures
        ));
        println!(
            "{:<20} {:>12.3e} {:>12.3e} {:>10.4} {:>8}",
            s.method.to_string(),
            s.mean_phi,
            s.mean_psi,
            s.total_seconds,
            s.failures
        );
    }
    for t in 0..opts.trials {
        for s in &report.methods {
            trials.push_str(&format!(
                "{},{},{},{}\n",
                t,
                s.method,
                fmt_f64(s.phi[t]),
                fmt_f64(s.psi[t])
            ));
        }
    }
    write(&report_path, &csv)?;
    write(&trials_path, &trials)?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[arg(long)]
    model: Option<ModelKind>,
    /// JSON file with the model parameters.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Spot polynomial coordinates, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    coords: Option<Vec<f64>>,
    /// `chi,xi`; defaults to the initial state of the parameters.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    state: Option<Vec<f64>>,
    /// Months to maturity, comma separated (default 0..=20).
    #[arg(long, value_delimiter = ',')]
    tenors: Option<Vec<f64>>,
    #[arg(long)]
    expm_method: Option<ExpmMethod>,
}

pub fn price(shared: &Shared, args: &PriceArgs) -> Result<(), CliError> {
    let file: PriceConfig = load(shared.config.as_deref())?;
    let model = args.model.or(file.model).unwrap_or(ModelKind::Pd);
    let params = match &args.params {
        Some(p) => crate::config::read_json(p)?,
        None => file.params.clone().unwrap_or_else(|| reference_params(0)),
    };
    params.validate().map_err(config_err)?;
    let coords = match model {
        ModelKind::Pd => Some(
            args.coords
                .clone()
                .map(CoordinateVector::new)
                .or(file.coords.clone())
                .unwrap_or_else(reference_coords),
        ),
        ModelKind::Ss => None,
    };
    let state = match &args.state {
        Some(v) if v.len() == 2 => [v[0], v[1]],
        Some(v) => {
            return Err(CliError::Config(format!(
                "--state needs 2 values (chi,xi), got {}",
                v.len()
            )))
        }
        None => file.state.unwrap_or([params.chi0, params.xi0]),
    };
    let tenors = args
        .tenors
        .clone()
        .or(file.tenors_months.clone())
        .unwrap_or_else(|| (0..=20).map(f64::from).collect());
    if tenors.is_empty()
        || tenors.iter().any(|t| !(t.is_finite() && *t >= 0.0))
        || tenors.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(CliError::Config(
            "tenors must be non-negative and strictly increasing".into(),
        ));
    }
    if state.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config("state must be finite".into()));
    }
    let method = args.expm_method.or(file.expm_method).unwrap_or_default();
    let x = StateVector::new(state[0], state[1]);

    let prices: Vec<f64> = match (&coords, model) {
        (Some(c), ModelKind::Pd) => {
            let pricer =
                PdPricer::new(&params, c, GeneratorOptions::default(), method).map_err(config_err)?;
            tenors
                .iter()
                .map(|&m| Ok(pricer.price(x, &pricer.loading(months_to_years(m))?)))
                .collect::<Result<_, polyfut::models::ModelError>>()
                .map_err(config_err)?
        }
        _ => tenors
            .iter()
            .map(|&m| ss_log_futures(&params, x, months_to_years(m)).exp())
            .collect(),
    };

    let dir = run_dir(shared.out.as_deref(), "price")?;
    let echo = PriceConfig {
        model: Some(model),
        params: Some(params),
        coords,
        state: Some(state),
        tenors_months: Some(tenors.clone()),
        expm_method: Some(method),
    };
    write_json(&dir.join(CONFIG_FILE), &echo)?;
    let mut csv = String::from("tenor_months,price\n");
    for (t, p) in tenors.iter().zip(&prices) {
        csv.push_str(&format!("{},{}\n", fmt_f64(*t), fmt_f64(*p)));
    }
    write(&dir.join("price.csv"), &csv)?;
    println!("priced {} tenors -> {}", tenors.len(), dir.display());
    Ok(())
}
