//! Initial vorticity fields.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{GridSpec, SpectralVector, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Initial-condition family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    /// `u = A (sin κx cos κy, −cos κx sin κy, 0)` with `κ = 2π/L`.
    #[serde(rename = "taylor_green_2d3d")]
    TaylorGreen2d3d,
    /// Arnold–Beltrami–Childress flow; `ω = κ u`.
    AbcFlow {
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "one")]
        b: f64,
        #[serde(default = "one")]
        c: f64,
    },
    /// Gaussian tube `ω = Γ/(π a²) exp(−ρ²/a²)` along `axis`, paired with a
    /// counter-rotating copy shifted by `L/2` so the field is mean-free.
    BurgersTube {
        radius: f64,
        circulation: f64,
        axis: Axis,
    },
    /// Random solenoidal field with energy spectrum `∝ k^slope` on
    /// `1 ≤ |m| ≤ k_max` (integer modes), normalized to unit rms vorticity
    /// before applying the amplitude.
    RandomSolenoidal {
        slope: f64,
        seed: u64,
        #[serde(default = "default_kmax")]
        k_max: usize,
    },
    /// Swirl about the box centre with `|ω| = r^{-p} sin θ` outside a core of
    /// radius `core`, tapered to zero before `L/2`.
    ClumpedBall {
        exponent: f64,
        #[serde(default)]
        core: Option<f64>,
    },
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::TaylorGreen2d3d => "taylor_green_2d3d",
            ScenarioKind::AbcFlow { .. } => "abc_flow",
            ScenarioKind::BurgersTube { .. } => "burgers_tube",
            ScenarioKind::RandomSolenoidal { .. } => "random_solenoidal",
            ScenarioKind::ClumpedBall { .. } => "clumped_ball",
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_kmax() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(flatten)]
    pub kind: ScenarioKind,
    #[serde(default = "one")]
    pub amplitude: f64,
    pub grid: GridSpec,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, amplitude: f64, grid: GridSpec) -> Self {
        Self {
            kind,
            amplitude,
            grid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(invalid("amplitude", "must be finite"));
        }
        let g = &self.grid;
        match &self.kind {
            ScenarioKind::BurgersTube {
                radius,
                circulation,
                ..
            } => {
                if !(*radius > 4.0 * g.dx() && *radius < g.box_length() / 4.0) {
                    return Err(invalid(
                        "radius",
                        format!(
                            "tube radius {radius} must lie in (4Δx, L/4) = ({}, {}); under-resolved or too wide",
                            4.0 * g.dx(),
                            g.box_length() / 4.0
                        ),
                    ));
                }
                if !circulation.is_finite() {
                    return Err(invalid("circulation", "must be finite"));
                }
            }
            ScenarioKind::RandomSolenoidal { k_max, .. } => {
                if *k_max == 0 || 3 * *k_max > g.n() {
                    return Err(invalid(
                        "k_max",
                        format!("must lie in [1, n/3] = [1, {}]", g.n() / 3),
                    ));
                }
            }
            ScenarioKind::ClumpedBall { exponent, core } => {
                if !(*exponent > 0.0) {
                    return Err(invalid("exponent", "must be positive"));
                }
                let c = core.unwrap_or(2.5 * g.dx());
                if !(c > 0.0 && c < g.box_length() / 8.0) {
                    return Err(invalid("core", "must lie in (0, L/8)"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Builds `ω₀` for a scenario. The result is divergence-free and has zero
/// spatial mean.
pub fn generate(s: &Scenario) -> Result<VectorField> {
    s.validate()?;
    let g = s.grid;
    let amp = s.amplitude;
    let kappa = TAU / g.box_length();
    let w = match &s.kind {
        ScenarioKind::TaylorGreen2d3d => VectorField::from_fn(g, |p| {
            [
                0.0,
                0.0,
                2.0 * amp * kappa * (kappa * p[0]).sin() * (kappa * p[1]).sin(),
            ]
        }),
        ScenarioKind::AbcFlow { a, b, c } => VectorField::from_fn(g, |p| {
            let (x, y, z) = (kappa * p[0], kappa * p[1], kappa * p[2]);
            let f = amp * kappa;
            [
                f * (a * z.sin() + c * y.cos()),
                f * (b * x.sin() + a * z.cos()),
                f * (c * y.sin() + b * x.cos()),
            ]
        }),
        ScenarioKind::BurgersTube {
            radius,
            circulation,
            axis,
        } => {
            let l = g.box_length();
            let centre = [0.5 * l; 3];
            let mut shifted = centre;
            // shift along the first transverse axis
            let t0 = (axis.index() + 1) % 3;
            shifted[t0] = 0.0;
            let a = tube_field(&g, *radius, *circulation * amp, *axis, centre);
            let b = tube_field(&g, *radius, *circulation * amp, *axis, shifted);
            let mut out = a;
            let c = axis.index();
            for (o, v) in out.component_mut(c).iter_mut().zip(b.component(c)) {
                *o -= v;
            }
            out
        }
        ScenarioKind::RandomSolenoidal { slope, seed, k_max } => {
            random_solenoidal(&g, *slope, *seed, *k_max).scale(amp)
        }
        ScenarioKind::ClumpedBall { exponent, core } => {
            clumped_ball(&g, *exponent, core.unwrap_or(2.5 * g.dx())).scale(amp)
        }
    };
    Ok(project(&w))
}

/// Leray projection with the `k = 0` mode removed: exact spectral
/// solenoidality and zero mean for grid-sampled fields.
pub fn project(w: &VectorField) -> VectorField {
    let hat = w.to_spectral();
    let g = *w.grid();
    let zero = [Complex64::default(); 3];
    hat.map_slots(|slot, c| {
        let k = crate::grid::ops::derivative_k(&g, slot);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            return zero;
        }
        let d = (c[0] * k[0] + c[1] * k[1] + c[2] * k[2]) / k2;
        [c[0] - d * k[0], c[1] - d * k[1], c[2] - d * k[2]]
    })
    .to_physical()
}

/// One Gaussian tube through `centre`, summed over the nearest periodic
/// images. Not mean-free.
pub fn tube_field(
    g: &GridSpec,
    radius: f64,
    circulation: f64,
    axis: Axis,
    centre: [f64; 3],
) -> VectorField {
    let l = g.box_length();
    let ax = axis.index();
    let (t0, t1) = ((ax + 1) % 3, (ax + 2) % 3);
    let peak = circulation / (PI * radius * radius);
    let mut out = VectorField::zeros(*g);
    let comp = out.component_mut(ax);
    for (idx, v) in comp.iter_mut().enumerate() {
        let p = g.point(idx);
        let mut s = 0.0;
        for i0 in -2..=2 {
            for i1 in -2..=2 {
                let d0 = p[t0] - centre[t0] + i0 as f64 * l;
                let d1 = p[t1] - centre[t1] + i1 as f64 * l;
                s += (-(d0 * d0 + d1 * d1) / (radius * radius)).exp();
            }
        }
        *v = peak * s;
    }
    out
}

fn random_solenoidal(g: &GridSpec, slope: f64, seed: u64, k_max: usize) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let km = k_max as i64;
    let mut hat = SpectralVector::zeros(*g);
    let n = g.n() as i64;
    let kappa = TAU / g.box_length();
    let slot = |m: [i64; 3]| {
        let w = |v: i64| v.rem_euclid(n) as usize;
        g.index(w(m[0]), w(m[1]), w(m[2]))
    };
    // Modes are visited in a fixed order independent of n, so the same seed
    // gives the same continuous field on every grid that resolves k_max.
    for mz in -km..=km {
        for my in -km..=km {
            for mx in -km..=km {
                let m = [mx, my, mz];
                let m2 = mx * mx + my * my + mz * mz;
                if m2 == 0 || m2 > km * km {
                    continue;
                }
                let mut draw = [Complex64::default(); 3];
                for d in &mut draw {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    *d = Complex64::new(re, im);
                }
                // keep one representative of each ±m pair
                if !is_positive_half(m) {
                    continue;
                }
                let kv = m.map(|c| c as f64 * kappa);
                let k = (m2 as f64).sqrt() * kappa;
                let env = k.powf(0.5 * (slope - 2.0));
                // û ⟂ k, then ω̂ = i k × û
                let dot = (draw[0] * kv[0] + draw[1] * kv[1] + draw[2] * kv[2]) / (k * k);
                let u = [0, 1, 2].map(|c| (draw[c] - dot * kv[c]) * env);
                let i = Complex64::new(0.0, 1.0);
                let w = [
                    i * (kv[1] * u[2] - kv[2] * u[1]),
                    i * (kv[2] * u[0] - kv[0] * u[2]),
                    i * (kv[0] * u[1] - kv[1] * u[0]),
                ];
                hat.set(slot(m), w);
                hat.set(slot([-mx, -my, -mz]), w.map(|z| z.conj()));
            }
        }
    }
    let w = hat.to_physical();
    let rms = (w.l2_norm().powi(2) / g.volume()).sqrt();
    if rms > 0.0 {
        w.scale(1.0 / rms)
    } else {
        w
    }
}

fn is_positive_half(m: [i64; 3]) -> bool {
    m[2] > 0 || (m[2] == 0 && (m[1] > 0 || (m[1] == 0 && m[0] > 0)))
}

fn smooth_taper(s: f64) -> f64 {
    // 1 for s <= 0, 0 for s >= 1, C² quintic in between
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

fn clumped_ball(g: &GridSpec, p: f64, core: f64) -> VectorField {
    let l = g.box_length();
    let c = [0.5 * l; 3];
    let (r1, r2) = (0.40 * l, 0.48 * l);
    VectorField::from_fn(*g, |x| {
        let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let rc = r.max(core);
        let taper = smooth_taper((r - r1) / (r2 - r1));
        let gr = rc.powf(-p - 1.0) * taper;
        [-d[1] * gr, d[0] * gr, 0.0]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::spectral_divergence_norm;

    fn grid(n: usize) -> GridSpec {
        GridSpec::periodic(n, 0.05).unwrap()
    }

    fn check_solenoidal_mean_free(w: &VectorField) {
        let hat = w.to_spectral();
        assert!(spectral_divergence_norm(&hat) < 1e-10, "divergence");
        for c in 0..3 {
            assert!(hat.component(c)[0].norm() < 1e-9 * w.max_norm() * w.grid().len() as f64);
        }
    }

    #[test]
    fn taylor_green_is_exact() {
        let g = grid(16);
        let w = generate(&Scenario::new(ScenarioKind::TaylorGreen2d3d, 1.0, g)).unwrap();
        let e = VectorField::from_fn(g, |p| [0.0, 0.0, 2.0 * p[0].sin() * p[1].sin()]);
        assert!(w.max_abs_diff(&e) < 1e-14);
        check_solenoidal_mean_free(&w);
    }

    #[test]
    fn random_is_deterministic_and_resolution_independent() {
        let kind = ScenarioKind::RandomSolenoidal {
            slope: -5.0 / 3.0,
            seed: 9,
            k_max: 4,
        };
        let a = generate(&Scenario::new(kind.clone(), 1.0, grid(16))).unwrap();
        let b = generate(&Scenario::new(kind.clone(), 1.0, grid(16))).unwrap();
        assert_eq!(a, b);
        check_solenoidal_mean_free(&a);
        let fine = generate(&Scenario::new(kind, 1.0, grid(32))).unwrap();
        // the coarse grid samples every other fine point
        let (gc, gf) = (grid(16), grid(32));
        let mut worst = 0.0f64;
        for k in 0..16 {
            for j in 0..16 {
                for i in 0..16 {
                    let x = a.at(gc.index(i, j, k));
                    let y = fine.at(gf.index(2 * i, 2 * j, 2 * k));
                    for c in 0..3 {
                        worst = worst.max((x[c] - y[c]).abs());
                    }
                }
            }
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn tube_peak_matches_gaussian() {
        let g = grid(64);
        let l = g.box_length();
        let a = l / 8.0;
        let w = generate(&Scenario::new(
            ScenarioKind::BurgersTube {
                radius: a,
                circulation: 1.0,
                axis: Axis::Z,
            },
            1.0,
            g,
        ))
        .unwrap();
        let peak = 1.0 / (PI * a * a);
        assert!((w.max_norm() - peak).abs() / peak < 0.01);
        check_solenoidal_mean_free(&w);
    }

    #[test]
    fn under_resolved_tube_rejected() {
        let g = grid(16);
        let s = Scenario::new(
            ScenarioKind::BurgersTube {
                radius: 2.0 * g.dx(),
                circulation: 1.0,
                axis: Axis::Z,
            },
            1.0,
            g,
        );
        assert!(generate(&s).is_err());
    }

    #[test]
    fn clumped_ball_and_abc_are_solenoidal() {
        let g = grid(32);
        let w = generate(&Scenario::new(
            ScenarioKind::ClumpedBall {
                exponent: 2.0,
                core: None,
            },
            1.0,
            g,
        ))
        .unwrap();
        check_solenoidal_mean_free(&w);
        let abc = generate(&Scenario::new(
            ScenarioKind::AbcFlow {
                a: 1.0,
                b: 1.0,
                c: 1.0,
            },
            1.0,
            g,
        ))
        .unwrap();
        check_solenoidal_mean_free(&abc);
    }
}
