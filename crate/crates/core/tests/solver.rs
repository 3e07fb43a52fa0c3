use vortgeo::grid::spectral_divergence_norm;
use vortgeo::scenario::{generate, Scenario, ScenarioKind};
use vortgeo::solver::{run, SolverConfig, Stepper};
use vortgeo::{GridSpec, SpectralVector, VectorField};

fn random(g: GridSpec, seed: u64, amp: f64) -> VectorField {
    let kind = ScenarioKind::RandomSolenoidal {
        slope: -5.0 / 3.0,
        seed,
        k_max: (g.n() / 3).min(4),
    };
    generate(&Scenario::new(kind, amp, g)).unwrap()
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[test]
fn global_error_is_fourth_order() {
    // the viscous part is integrated exactly, so the order is that of the
    // nonlinear term; measured against a fine-step reference
    let g = GridSpec::periodic(16, 0.05).unwrap();
    let w0 = random(g, 4, 2.0);
    let t_end = 0.4;
    let at = |dt: f64| {
        let cfg = SolverConfig::new(g, t_end, t_end).with_dt(dt);
        run(&cfg, &w0).unwrap().last().unwrap().1.clone()
    };
    let reference = at(0.4 / 256.0);
    let dts = [0.4 / 8.0, 0.4 / 16.0, 0.4 / 32.0];
    let errs: Vec<f64> = dts.iter().map(|&dt| at(dt).l2_distance(&reference)).collect();
    let s = slope(&dts.map(f64::ln), &errs.iter().map(|e| e.ln()).collect::<Vec<_>>());
    assert!((s - 4.0).abs() < 0.3, "slope {s}, errors {errs:?}");
}

#[test]
fn energy_decays_monotonically() {
    let g = GridSpec::periodic(32, 0.05).unwrap();
    let traj = run(&SolverConfig::new(g, 1.0, 0.25), &random(g, 1, 1.0)).unwrap();
    assert!(traj.history.len() > 10);
    for w in traj.history.windows(2) {
        assert!(w[1].energy <= w[0].energy * (1.0 + 1e-8), "{:?}", w);
    }
    assert!(traj.history.last().unwrap().energy < traj.history[0].energy);
}

#[test]
fn divergence_and_mean_preserved_over_1000_steps() {
    let g = GridSpec::periodic(16, 0.02).unwrap();
    let stepper = Stepper::new(g, 0.4, true);
    let mut w = random(g, 9, 1.0);
    for _ in 0..1000 {
        w = stepper.step(&w, 0.01).unwrap();
    }
    let hat = SpectralVector::try_forward(&w).unwrap();
    assert!(spectral_divergence_norm(&hat) < 1e-10);
    for c in 0..3 {
        let mean: f64 = w.component(c).iter().sum::<f64>() / g.len() as f64;
        assert!(mean.abs() < 1e-14 * w.max_norm(), "mean {mean}");
    }
}

#[test]
fn exact_two_dimensional_solution() {
    let nu = 0.1;
    let g = GridSpec::periodic(32, nu).unwrap();
    let w0 = generate(&Scenario::new(ScenarioKind::TaylorGreen2d3d, 1.0, g)).unwrap();
    let traj = run(&SolverConfig::new(g, 0.5, 0.125), &w0).unwrap();
    for (t, w) in traj.iter() {
        let expect = w0.scale((-2.0 * nu * t).exp());
        assert!(w.l2_distance(&expect) < 1e-12 * expect.l2_norm(), "t = {t}");
    }
}

#[test]
fn blowup_guard_stops_run() {
    let g = GridSpec::periodic(16, 1e-4).unwrap();
    let mut cfg = SolverConfig::new(g, 2.0, 0.5);
    cfg.blowup_factor = 1.0001;
    let traj = run(&cfg, &random(g, 2, 5.0)).unwrap();
    assert!(matches!(traj.status, vortgeo::solver::RunStatus::UnderResolved { .. }));
}
