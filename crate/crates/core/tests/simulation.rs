use polyfut::models::{CoordinateVector, ModelKind};
use polyfut::simulation::*;

#[test]
fn short_factor_reaches_its_stationary_variance() {
    let p = reference_params(1);
    let n = 100_000;
    let states = simulate_states(&p, n, 1.0, 5);
    let chi = states.column(0);
    let mean = chi.mean();
    let var = chi.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let want = p.sigma_chi.powi(2) / (2.0 * p.kappa);
    assert!((var - want).abs() < 0.05 * want, "{var} vs {want}");
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    for (k, &i) in idx.iter().enumerate() {
        r[i] = k as f64;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn residual_spread_falls_with_tenor() {
    let cfg = reference_config(ModelKind::Pd, 13, 6);
    let panel = simulate_panel(&cfg).unwrap();
    let clean = model_prices(
        cfg.model,
        &cfg.params,
        cfg.coords.as_ref(),
        &panel.tenors,
        panel.true_states.as_ref().unwrap(),
        cfg.expm_method,
    )
    .unwrap();
    let resid = &panel.observations - clean;
    let sds: Vec<f64> = resid
        .column_iter()
        .map(|c| (c.iter().map(|v| v * v).sum::<f64>() / c.len() as f64).sqrt())
        .collect();
    for (sd, want) in sds.iter().zip(&cfg.params.meas_sd) {
        assert!((sd - want).abs() < 0.15 * want, "{sd} vs {want}");
    }
    let rho = pearson(&ranks(&sds), &ranks(&panel.tenors));
    assert!(rho < -0.9, "spearman {rho}");
}

#[test]
fn constant_payoff_panel_is_one_plus_noise() {
    let mut cfg = reference_config(ModelKind::Pd, 13, 7);
    cfg.coords = Some(CoordinateVector::constant(6));
    let panel = simulate_panel(&cfg).unwrap();
    let n = panel.n_obs() as f64;
    for (i, col) in panel.observations.column_iter().enumerate() {
        let sd = cfg.params.meas_sd[i];
        assert!((col.mean() - 1.0).abs() < 4.0 * sd / n.sqrt(), "column {i}");
    }
}

#[test]
fn seeds_fix_the_panel() {
    let a = simulate_panel(&reference_config(ModelKind::Pd, 5, 9)).unwrap();
    let b = simulate_panel(&reference_config(ModelKind::Pd, 5, 9)).unwrap();
    let c = simulate_panel(&reference_config(ModelKind::Pd, 5, 10)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.observations, c.observations);
}

#[test]
fn schwartz_smith_panel_is_in_log_prices() {
    let cfg = reference_config(ModelKind::Ss, 3, 2);
    let panel = simulate_panel(&cfg).unwrap();
    assert_eq!(panel.convention, Convention::LogPrice);
    let s = panel.true_states.as_ref().unwrap();
    // First row is the initial state plus noise of at most a few SDs.
    let spot = s[(0, 0)] + s[(0, 1)];
    assert!((panel.observations[(0, 0)] - spot).abs() < 1.0);
}

#[test]
fn panel_files_round_trip() {
    let cfg = reference_config(ModelKind::Pd, 4, 3);
    let mut small = cfg.clone();
    small.n_obs = 25;
    let panel = simulate_panel(&small).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    let meta = PanelMetadata::from_config(&small);
    let files = write_panel(&csv, &panel, &meta).unwrap();
    assert!(files.states.unwrap().exists());
    let (back, meta2) = read_panel(&csv).unwrap();
    assert_eq!(meta, meta2);
    assert_eq!(back.tenors, panel.tenors);
    assert_eq!(back.observations, panel.observations);
    assert_eq!(back.true_states, panel.true_states);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = reference_config(ModelKind::Pd, 3, 1);
    cfg.tenors_months = vec![2.0, 1.0, 3.0];
    assert!(simulate_panel(&cfg).is_err());
    let mut cfg = reference_config(ModelKind::Pd, 3, 1);
    cfg.params.meas_sd.pop();
    assert!(simulate_panel(&cfg).is_err());
    let mut cfg = reference_config(ModelKind::Pd, 3, 1);
    cfg.coords = None;
    assert!(simulate_panel(&cfg).is_err());
}
