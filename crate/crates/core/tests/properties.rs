use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vortgeo::cascade::{build_cover, ensemble_average, CoverMode, CoverSpec, CutoffFamily};
use vortgeo::geometry::{fibonacci_directions, segment_occupancy, sparseness_scan, superlevel};
use vortgeo::grid::{biot_savart, curl};
use vortgeo::harmonic::{h_delta, harmonic_measure_ws, DiskProblem};
use vortgeo::oscillation::{distribution_function, llogl, mean_oscillation};
use vortgeo::scenario::{generate, Scenario, ScenarioKind};
use vortgeo::{GridSpec, ScalarField, VectorField};

fn grid(n: usize) -> GridSpec {
    GridSpec::periodic(n, 0.05).unwrap()
}

fn noise_field(g: GridSpec, seed: u64) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = || (0..g.len()).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect::<Vec<_>>();
    VectorField::new(g, [c(), c(), c()]).unwrap()
}

fn solenoidal(g: GridSpec, seed: u64, slope: f64) -> VectorField {
    let kind = ScenarioKind::RandomSolenoidal {
        slope,
        seed,
        k_max: g.n() / 3,
    };
    generate(&Scenario::new(kind, 1.0, g)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval(seed in any::<u64>()) {
        let f = noise_field(grid(8), seed).scalar(0);
        let phys: f64 = f.values().iter().map(|v| v * v).sum();
        prop_assert!((phys - f.to_spectral().parseval_sum()).abs() <= 1e-12 * phys);
    }

    #[test]
    fn curl_inverts_biot_savart(seed in any::<u64>(), slope in -4.0f64..0.0) {
        let w = solenoidal(grid(16), seed, slope);
        let back = curl(&biot_savart(&w).unwrap().velocity).unwrap();
        prop_assert!(back.l2_distance(&w) <= 1e-10 * w.l2_norm());
    }

    #[test]
    fn chebyshev_holds_at_every_level(seed in any::<u64>(), frac in 0.0f64..1.0) {
        let w = noise_field(grid(8), seed);
        let m = frac * w.max_norm();
        let vol = superlevel(&w, m).unwrap().volume();
        prop_assert!(m * vol <= w.magnitude().l1_norm());
    }

    #[test]
    fn superlevel_sets_are_nested(seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let w = noise_field(grid(8), seed);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let s = w.max_norm();
        let big = superlevel(&w, lo * s).unwrap();
        let small = superlevel(&w, hi * s).unwrap();
        prop_assert!(small.mask().iter().zip(big.mask()).all(|(&x, &y)| !x || y));
    }

    #[test]
    fn h_is_decreasing(a in 0.001f64..0.999, b in 0.001f64..0.999) {
        prop_assume!((a - b).abs() > 1e-9);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(h_delta(lo).unwrap() > h_delta(hi).unwrap());
    }

    #[test]
    fn occupancy_symmetries(seed in any::<u64>(), k in 0usize..64, r in 0.3f64..3.0) {
        let g = grid(16);
        let w = solenoidal(g, seed, -2.0);
        let mask = superlevel(&w, 0.4 * w.max_norm()).unwrap();
        let d = fibonacci_directions(64)[k];
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        let x0 = [0; 3].map(|_: i32| rng.gen::<f64>() * g.box_length());
        let occ = segment_occupancy(&mask, x0, d, r).unwrap();
        let flipped = segment_occupancy(&mask, x0, d.map(|v| -v), r).unwrap();
        prop_assert_eq!(occ, flipped);

        // cyclic relabelling of the axes applied to field, point and direction
        let perm = |v: [f64; 3]| [v[2], v[0], v[1]];
        let n = g.n();
        let rotated = VectorField::from_fn(g, |p| {
            let i = |x: f64| ((x / g.dx()).round() as usize) % n;
            let idx = g.index(i(p[1]), i(p[2]), i(p[0]));
            perm(w.at(idx))
        });
        let rmask = superlevel(&rotated, 0.4 * w.max_norm()).unwrap();
        let rocc = segment_occupancy(&rmask, perm(x0), perm(d), r).unwrap();
        let m = vortgeo::geometry::quadrature_points(&g, r) as f64;
        prop_assert!((occ - rocc).abs() <= 3.0 / m, "{} vs {}", occ, rocc);
    }

    #[test]
    fn mean_oscillation_affine(seed in any::<u64>(), c in -5.0f64..5.0, s in 0.1f64..10.0) {
        let g = grid(16);
        let f = noise_field(g, seed).scalar(1);
        let centre = [3, 7, 11];
        let side = 1.5;
        let base = mean_oscillation(&f, centre, side);
        let shifted = mean_oscillation(&f.map(|v| v + c), centre, side);
        let scaled = mean_oscillation(&f.map(|v| s * v), centre, side);
        prop_assert!((shifted - base).abs() <= 1e-12 * (1.0 + base));
        prop_assert!((scaled - s * base).abs() <= 1e-12 * s * base);
    }

    #[test]
    fn distribution_and_layer_cake(seed in any::<u64>()) {
        let g = grid(16);
        let f = solenoidal(g, seed, -1.0).scalar(2);
        let sup = f.max_abs();
        let m = 4000;
        let betas: Vec<f64> = (1..=m).map(|i| sup * i as f64 / m as f64).collect();
        let lam = distribution_function(&f, &betas).unwrap();
        prop_assert!(lam.windows(2).all(|w| w[1] <= w[0]));
        // ∫₀^sup λ dβ by the midpoint-free left sum, with λ(0+) = total support
        let db = sup / m as f64;
        let vol0 = f.values().iter().filter(|v| v.abs() > 0.0).count() as f64 * g.cell_volume();
        let integral = db * (vol0 + lam[..m - 1].iter().sum::<f64>());
        let l1 = f.l1_norm();
        prop_assert!((integral - l1).abs() <= 0.01 * l1, "{} vs {}", integral, l1);
    }

    #[test]
    fn llogl_is_nonnegative(seed in any::<u64>(), amp in 0.0f64..5.0) {
        let g = grid(8);
        let w = noise_field(g, seed).scale(amp);
        let psi = ScalarField::from_fn(g, |p| 0.5 + 0.5 * p[0].cos());
        prop_assert!(llogl(&w, &psi).unwrap() >= 0.0);
    }

    #[test]
    fn harmonic_mass_and_symmetry(seed in any::<u64>(), a in -0.9f64..0.0, b in 0.0f64..0.9, y in 0.1f64..0.6) {
        let p = DiskProblem::new(vec![[a, b]], [0.1, y], 10_000, seed);
        let e = harmonic_measure_ws(&p).unwrap();
        prop_assert_eq!(e.set_hits + e.circle_hits, e.walkers);
        prop_assert_eq!(&harmonic_measure_ws(&p).unwrap(), &e);
        let r = harmonic_measure_ws(&DiskProblem { seed: seed ^ 1, ..p.reflected() }).unwrap();
        prop_assert!((r.estimate - e.estimate).abs() <= 4.0 * e.stderr.hypot(r.stderr) + 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn covers_certify(frac in 0.3f64..1.0, seed in any::<u64>()) {
        let g = grid(32);
        let mut spec = CoverSpec::centred(&g, frac, 16, 80, CoverMode::Jittered { seed });
        // an infeasible request names bounds under which the same cover certifies
        let cover = match build_cover(&g, &spec) {
            Ok(c) => c,
            Err(vortgeo::Error::CoverInfeasible { min_k1, min_k2, .. }) => {
                spec.k1 = min_k1.max(spec.k1);
                spec.k2 = min_k2.max(spec.k2);
                build_cover(&g, &spec).unwrap()
            }
            Err(e) => panic!("{e}"),
        };
        let c = &cover.certificate;
        let n = cover.centres.len() as f64;
        prop_assert!(n >= c.lower_bound && n <= c.upper_bound);
        prop_assert!(c.min_coverage >= 1 && c.max_multiplicity <= spec.k2);
        prop_assert_eq!(CutoffFamily::new(&g, &cover).verify(&g).violations, 0);
    }

    #[test]
    fn ensemble_is_permutation_invariant(values in prop::collection::vec(-1e3f64..1e3, 1..200), seed in any::<u64>()) {
        let mut shuffled = values.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.gen_range(0..=i));
        }
        prop_assert_eq!(ensemble_average(&values).to_bits(), ensemble_average(&shuffled).to_bits());
    }

    #[test]
    fn scans_are_deterministic(seed in any::<u64>()) {
        let g = grid(16);
        let w = solenoidal(g, seed, -2.0);
        let mask = superlevel(&w, 0.5 * w.max_norm()).unwrap();
        let probes = vortgeo::geometry::default_probes(&mask, 16);
        let a = sparseness_scan(&mask, &probes, 1.0, 0.5, 32).unwrap();
        let b = sparseness_scan(&mask, &probes, 1.0, 0.5, 32).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
