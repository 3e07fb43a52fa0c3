use std::f64::consts::PI;

use vortgeo::cascade::{
    build_cover, cascade_report, density_spread, localized_vst, macro_cutoff, macro_quantities, CascadeConfig,
    CascadeRequest, CoverMode, CoverSpec, CutoffProfile, ScaleVerdict, TemporalCutoff, DEFAULT_K1, DEFAULT_K2,
};
use vortgeo::scenario::{generate, project, tube_field, Axis, Scenario, ScenarioKind};
use vortgeo::solver::{run, stretching_density, SolverConfig, Trajectory};
use vortgeo::{GridSpec, ScalarField, VectorField};

fn frozen(w: &VectorField, snapshots: usize) -> Trajectory {
    let g = *w.grid();
    let dt = 1.0 / (snapshots - 1) as f64;
    let snaps = (0..snapshots).map(|i| (i as f64 * dt, w.clone())).collect();
    Trajectory::from_snapshots(SolverConfig::new(g, 1.0, dt), snaps).unwrap()
}

fn taylor_green_run(n: usize, nu: f64) -> Trajectory {
    let g = GridSpec::periodic(n, nu).unwrap();
    let w0 = generate(&Scenario::new(ScenarioKind::TaylorGreen2d3d, 1.0, g)).unwrap();
    run(&SolverConfig::new(g, 1.0, 1.0 / 32.0), &w0).unwrap()
}

#[test]
fn planar_run_reports_sign_fail_everywhere() {
    let traj = taylor_green_run(32, 0.1);
    let cfg = CascadeConfig::default();
    let r0 = cfg.macro_radius(traj.grid());
    let mut req = CascadeRequest::new(DEFAULT_K1, DEFAULT_K2, 2.0);
    let dyadic = cascade_report(&traj, 1.0, &req, &cfg).unwrap();
    assert!(dyadic.no_stretching);
    req.scales = vec![r0, r0 / 2.0, r0 / 4.0];
    let rep = cascade_report(&traj, 1.0, &req, &cfg).unwrap();
    assert!(rep.no_stretching);
    assert!(rep.macro_quantities.p0t > 0.0);
    assert!(!rep.rows.is_empty());
    for row in &rep.rows {
        assert_eq!(row.verdict, ScaleVerdict::SignFail);
        assert_eq!(row.mean_vst, 0.0);
    }
    assert!(rep.notes.iter().any(|n| n.contains("stretching")), "{:?}", rep.notes);
}

#[test]
fn random_run_produces_finite_table() {
    let g = GridSpec::periodic(32, 0.02).unwrap();
    let kind = ScenarioKind::RandomSolenoidal {
        slope: -5.0 / 3.0,
        seed: 3,
        k_max: 6,
    };
    let w0 = generate(&Scenario::new(kind, 2.0, g)).unwrap();
    let traj = run(&SolverConfig::new(g, 0.6, 0.05), &w0).unwrap();
    let cfg = CascadeConfig::default();
    let r0 = cfg.macro_radius(&g);
    let req = CascadeRequest {
        scales: vec![r0, r0 / 2.0, r0 / 4.0],
        ..CascadeRequest::new(DEFAULT_K1, DEFAULT_K2, 2.0)
    };
    let rep = cascade_report(&traj, 0.6, &req, &cfg).unwrap();
    assert!(!rep.no_stretching);
    assert!(rep.rows.len() >= 3);
    for row in &rep.rows {
        if row.mean_vst > 0.0 {
            match row.verdict {
                ScaleVerdict::Measured { c_hat, .. } => assert!(c_hat.is_finite() && c_hat >= 1.0),
                ScaleVerdict::SignFail => panic!("positive mean reported as sign-fail"),
            }
        } else {
            assert_eq!(row.verdict, ScaleVerdict::SignFail);
        }
        assert!(row.spread_min <= row.mean_vst && row.mean_vst <= row.spread_max);
        assert_eq!(row.cutoff_violations, 0);
    }
}

/// Tube along z through the box centre plus a weak vortex array whose strain
/// stretches it.
fn strained_tube(g: GridSpec, eps: f64) -> VectorField {
    let c = 0.5 * g.box_length();
    let tube = tube_field(&g, 0.3, 2.0, Axis::Z, [c; 3]);
    let background = VectorField::from_fn(g, |p| {
        let (x, y, z) = (p[0] - c, p[1] - c, p[2] - c);
        [-y.sin() * z.sin(), x.sin() * z.sin(), 0.0]
    });
    let mut w = tube;
    for k in 0..3 {
        for (a, b) in w.component_mut(k).iter_mut().zip(background.component(k)) {
            *a += eps * b;
        }
    }
    project(&w)
}

#[test]
fn strained_tube_has_positive_stretching_at_all_scales() {
    let g = GridSpec::periodic(32, 0.05).unwrap();
    let traj = frozen(&strained_tube(g, 0.2), 17);
    let cfg = CascadeConfig::default();
    for frac in [1.0, 0.5, 0.25] {
        let cover = build_cover(&g, &CoverSpec::centred(&g, frac, DEFAULT_K1, DEFAULT_K2, CoverMode::Lattice)).unwrap();
        let vst = localized_vst(&traj, &cover, 1.0, &cfg).unwrap();
        let mean = vst.iter().sum::<f64>() / vst.len() as f64;
        assert!(mean > 0.0, "R0*{frac}: mean {mean}");
    }
}

#[test]
fn single_mode_scale_is_inverse_wavenumber() {
    let g = GridSpec::periodic(32, 0.05).unwrap();
    for k0 in [2.0, 3.0] {
        let w = VectorField::from_fn(g, |p| [0.0, 0.0, (k0 * p[0]).cos()]);
        let mq = macro_quantities(&frozen(&w, 17), 1.0, &CascadeConfig::default()).unwrap();
        let sigma = mq.sigma.unwrap();
        let r = sigma * k0;
        assert!((0.5..=2.0).contains(&r), "k0 = {k0}: sigma = {sigma}");
    }
}

#[test]
fn macro_quantities_follow_closed_form_decay() {
    // |ω(s)|² = |ω₀|² e^{−4νs}, so E₀ₜ factors into a spatial and a time integral
    let nu = 0.1;
    let traj = taylor_green_run(32, nu);
    let g = *traj.grid();
    let cfg = CascadeConfig::default();
    let r0 = cfg.macro_radius(&g);
    let psi0 = macro_cutoff(&g, cfg.centre(&g), r0, cfg.rho).unwrap();
    let w0 = &traj.snapshots()[0];
    let spatial: f64 = (0..g.len())
        .map(|i| {
            let v = w0.at(i);
            0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) * psi0.values()[i].sqrt()
        })
        .sum::<f64>()
        * g.cell_volume();
    let eta = TemporalCutoff::new(1.0, cfg.kappa).unwrap();
    for &t in traj.times().iter().filter(|&&t| t > 2.0 / 3.0) {
        let m = 20_000;
        let h = t / m as f64;
        let time: f64 = (0..=m)
            .map(|j| {
                let s = j as f64 * h;
                let wgt = if j == 0 || j == m { 0.5 } else { 1.0 };
                wgt * eta.eta(s).sqrt() * (-4.0 * nu * s).exp()
            })
            .sum::<f64>()
            * h;
        let expect = spatial * time / (t * r0.powi(3));
        let mq = macro_quantities(&traj, t, &cfg).unwrap();
        assert!((mq.e0t - expect).abs() < 2e-3 * expect, "t = {t}: {} vs {expect}", mq.e0t);
    }
}

#[test]
fn localized_vst_matches_direct_quadrature() {
    let g = GridSpec::periodic(32, 0.05).unwrap();
    let kind = ScenarioKind::RandomSolenoidal {
        slope: -5.0 / 3.0,
        seed: 1,
        k_max: 4,
    };
    let traj = run(&SolverConfig::new(g, 1.0, 1.0 / 16.0), &generate(&Scenario::new(kind, 1.0, g)).unwrap()).unwrap();
    let cfg = CascadeConfig::default();
    let cover = build_cover(&g, &CoverSpec::centred(&g, 1.0, 1, 1, CoverMode::Lattice)).unwrap();
    let vst = localized_vst(&traj, &cover, 1.0, &cfg).unwrap();
    assert_eq!(vst.len(), 1);

    let r = cover.spec.scale;
    let c = cover.centres[0];
    let profile = CutoffProfile::new(cfg.rho).unwrap();
    let psi = ScalarField::from_fn(g, |p| {
        let d = g.periodic_delta(c, p);
        profile.eval((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() / r).0
    });
    let eta = TemporalCutoff::new(1.0, cfg.kappa).unwrap();
    let vals: Vec<f64> = traj
        .iter()
        .map(|(s, w)| {
            let st = stretching_density(w).unwrap();
            eta.eta(s) * st.values().iter().zip(psi.values()).map(|(a, b)| a * b).sum::<f64>() * g.cell_volume()
        })
        .collect();
    let times = traj.times();
    let integral: f64 = (1..times.len())
        .map(|i| 0.5 * (times[i] - times[i - 1]) * (vals[i] + vals[i - 1]))
        .sum();
    let expect = integral / r.powi(3);
    assert!((vst[0] - expect).abs() <= 1e-10 * expect.abs().max(1e-300), "{} vs {expect}", vst[0]);
}

#[test]
fn oscillatory_density_spread_shrinks_with_scale() {
    let g = GridSpec::periodic(64, 0.05).unwrap();
    let cfg = CascadeConfig::default();
    let r0 = cfg.macro_radius(&g);
    let lambda = r0 / 2.0;
    let f = ScalarField::from_fn(g, |p| (2.0 * PI * p[0] / lambda).sin());
    let coarse = density_spread(&f, r0 / 2.0, DEFAULT_K1, DEFAULT_K2, 8, 3, &cfg).unwrap();
    let fine = density_spread(&f, r0 / 8.0, DEFAULT_K1, DEFAULT_K2, 8, 3, &cfg).unwrap();
    let width = |s: &vortgeo::cascade::SpreadReport| s.max - s.min;
    assert!(width(&coarse) > width(&fine), "{} vs {}", width(&coarse), width(&fine));
}
