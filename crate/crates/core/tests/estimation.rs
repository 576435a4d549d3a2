use polyfut::estimation::*;
use polyfut::models::ModelKind;
use polyfut::simulation::{reference_config, simulate_panel, FuturesPanel, SimulationConfig};

fn small(model: ModelKind, m: usize, n: usize, seed: u64) -> (SimulationConfig, FuturesPanel) {
    let mut sim = reference_config(model, m, seed);
    sim.n_obs = n;
    sim.params.meas_sd = (0..m).map(|i| 0.05 - 0.01 * i as f64).collect();
    let panel = simulate_panel(&sim).unwrap();
    (sim, panel)
}

fn cfg_for(sim: &SimulationConfig, regime: CaseRegime, filter: FilterKind) -> EstimationConfig {
    EstimationConfig::new(regime, filter, sim.model, sim.params.clone(), sim.coords.clone())
}

#[test]
fn case1_reports_the_truth_loglik() {
    let (sim, panel) = small(ModelKind::Pd, 4, 200, 1);
    let cfg = cfg_for(&sim, CaseRegime::Case1, FilterKind::Ekf);
    let r = fit(&cfg, &panel).unwrap();
    assert!(r.free.is_empty());
    assert_eq!(r.starts.len(), 1);
    let direct = -negative_loglik_natural(&cfg, &sim.params, sim.coords.as_ref(), &panel);
    assert!((r.loglik - direct).abs() <= 1e-12 * direct.abs());
    assert_eq!(r.params, sim.params);
}

#[test]
fn reported_loglik_re_evaluates_at_the_estimate() {
    let (sim, panel) = small(ModelKind::Ss, 3, 150, 2);
    let mut cfg = cfg_for(&sim, CaseRegime::Case3, FilterKind::Kf);
    cfg.starts = 2;
    cfg.max_evals = 800;
    let r = fit(&cfg, &panel).unwrap();
    let again = -negative_loglik(&r.free, &cfg, &panel);
    assert!((r.loglik - again).abs() <= 1e-8 * again.abs().max(1.0));
    let natural = -negative_loglik_natural(&cfg, &r.params, r.coords.as_ref(), &panel);
    assert!((r.loglik - natural).abs() <= 1e-8 * natural.abs().max(1.0));
}

#[test]
fn objective_never_gets_worse_along_a_start() {
    let (sim, panel) = small(ModelKind::Pd, 3, 150, 3);
    let mut cfg = cfg_for(&sim, CaseRegime::Case2, FilterKind::Ekf);
    cfg.starts = 3;
    cfg.max_evals = 600;
    let r = fit(&cfg, &panel).unwrap();
    for s in &r.starts {
        assert!(s.final_objective <= s.initial_objective);
        assert!(s.evals <= cfg.max_evals + 1);
        for w in s.trace.windows(2) {
            assert!(w[1].0 >= w[0].0 && w[1].1 <= w[0].1, "start {}: {:?}", s.index, w);
        }
    }
    let best = r.starts.iter().map(|s| s.final_objective).fold(f64::INFINITY, f64::min);
    assert_eq!(r.starts[r.best_start].final_objective, best);
    assert!((-r.loglik - best).abs() <= 1e-8 * best.abs());
}

#[test]
fn case3_beats_the_truth_on_a_small_panel() {
    let (sim, panel) = small(ModelKind::Ss, 3, 400, 4);
    let mut cfg = cfg_for(&sim, CaseRegime::Case3, FilterKind::Kf);
    cfg.starts = 4;
    cfg.max_evals = 4000;
    let r = fit(&cfg, &panel).unwrap();
    let truth = -negative_loglik_natural(&cfg, &sim.params, None, &panel);
    assert!(r.loglik >= truth - 1.0, "{} vs truth {truth}", r.loglik);
    let rec = recovery_report(&r, &sim.params, None);
    for i in 1..=3 {
        let row = rec.get(&format!("sigma_{i}")).unwrap();
        assert!(row.rel_error < 0.3, "{row:?}");
    }
}

#[test]
fn runs_are_deterministic() {
    let (sim, panel) = small(ModelKind::Pd, 3, 100, 5);
    let mut cfg = cfg_for(&sim, CaseRegime::Case2, FilterKind::Ukf);
    cfg.starts = 3;
    cfg.max_evals = 300;
    let a = fit(&cfg, &panel).unwrap();
    let b = fit(&cfg, &panel).unwrap();
    assert_eq!(a.free, b.free);
    assert_eq!(a.starts, b.starts);
    cfg.seed = 1;
    let c = fit(&cfg, &panel).unwrap();
    assert_ne!(a.starts[1].initial_objective, c.starts[1].initial_objective);
}

#[test]
fn mismatched_configs_are_rejected() {
    let (sim, panel) = small(ModelKind::Pd, 3, 50, 6);
    let mut cfg = cfg_for(&sim, CaseRegime::Case1, FilterKind::Kf);
    assert!(matches!(fit(&cfg, &panel), Err(EstimationError::InvalidConfig(_))));
    cfg.filter = FilterKind::Ekf;
    cfg.params.meas_sd.push(0.1);
    assert!(matches!(fit(&cfg, &panel), Err(EstimationError::InvalidConfig(_))));
}
