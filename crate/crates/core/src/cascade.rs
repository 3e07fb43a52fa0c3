//! Multi-scale ensemble averages of localized vortex stretching.
//!
//! A cover of the macro ball `B(c, R₀)` by balls `B(x_i, R)` carries smooth
//! cutoffs `ψ_i`; per-element space-time integrals against `η(s) ψ_i(x)` are
//! averaged over the cover and compared with macro-scale enstrophy and
//! palinstrophy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{biot_savart, gradient, laplacian, GridSpec, ScalarField, VectorField};
use crate::numeric;
use crate::solver::{stretching_density, Trajectory};

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

fn smoothstep_d1(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    30.0 * t * t * (1.0 - t) * (1.0 - t)
}

fn smoothstep_d2(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
}

/// Radial cutoff `Ψ(s) = φ(s)^{1/(1−ρ)}` of `s = |x − x_i| / R`, with `φ`
/// the quintic smoothstep from one at `s = 1` to zero at `s = 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub rho: f64,
    /// Certified bound for `R |∇ψ| / ψ^ρ`.
    pub c_grad: f64,
    /// Certified bound for `R² |Δψ| / ψ^{2ρ−1}`.
    pub c_lap: f64,
}

const PROFILE_SAMPLES: usize = 200_000;

impl CutoffProfile {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.5 && rho < 1.0) {
            return Err(invalid("rho", format!("must lie in (1/2, 1), got {rho}")));
        }
        let q = 1.0 / (1.0 - rho);
        // |Ψ'|/Ψ^ρ = q|φ'| and |Ψ'' + 2Ψ'/s|/Ψ^{2ρ−1} = |q(q−1)φ'² + qφ(φ'' + 2φ'/s)|
        let c_grad = q * 15.0 / 8.0;
        let mut c_lap: f64 = 0.0;
        for k in 0..=PROFILE_SAMPLES {
            let s = 1.0 + k as f64 / PROFILE_SAMPLES as f64;
            let t = s - 1.0;
            let phi = 1.0 - smoothstep(t);
            let d1 = -smoothstep_d1(t);
            let d2 = -smoothstep_d2(t);
            c_lap = c_lap.max((q * (q - 1.0) * d1 * d1 + q * phi * (d2 + 2.0 * d1 / s)).abs());
        }
        Ok(Self {
            rho,
            c_grad,
            // sampling margin
            c_lap: c_lap * (1.0 + 1e-6),
        })
    }

    fn q(&self) -> f64 {
        1.0 / (1.0 - self.rho)
    }

    /// `c_ρ = max(c_grad, c_lap)`.
    pub fn c_rho(&self) -> f64 {
        self.c_grad.max(self.c_lap)
    }

    /// `(Ψ, Ψ', Ψ'')` at `s`.
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        if s <= 1.0 {
            return (1.0, 0.0, 0.0);
        }
        if s >= 2.0 {
            return (0.0, 0.0, 0.0);
        }
        let q = self.q();
        let t = s - 1.0;
        let phi = 1.0 - smoothstep(t);
        let d1 = -smoothstep_d1(t);
        let d2 = -smoothstep_d2(t);
        let v = phi.powf(q);
        let p1 = q * phi.powf(q - 1.0) * d1;
        let p2 = q * (q - 1.0) * phi.powf(q - 2.0) * d1 * d1 + q * phi.powf(q - 1.0) * d2;
        (v, p1, p2)
    }
}

/// `η = θ^{1/(1−κ)}` with `θ` the smoothstep from `T/3` to `2T/3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalCutoff {
    pub horizon: f64,
    pub kappa: f64,
    /// Certified bound for `T |η'| / η^κ`.
    pub c_kappa: f64,
}

impl TemporalCutoff {
    pub fn new(horizon: f64, kappa: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(invalid("horizon", "must be positive"));
        }
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(invalid("kappa", format!("must lie in (0, 1), got {kappa}")));
        }
        let p = 1.0 / (1.0 - kappa);
        Ok(Self {
            horizon,
            kappa,
            c_kappa: p * 3.0 * 15.0 / 8.0,
        })
    }

    pub fn eta(&self, s: f64) -> f64 {
        let p = 1.0 / (1.0 - self.kappa);
        smoothstep(3.0 * s / self.horizon - 1.0).powf(p)
    }

    pub fn eta_prime(&self, s: f64) -> f64 {
        let p = 1.0 / (1.0 - self.kappa);
        let t = 3.0 * s / self.horizon - 1.0;
        if !(0.0..=1.0).contains(&t) {
            return 0.0;
        }
        p * smoothstep(t).powf(p - 1.0) * smoothstep_d1(t) * 3.0 / self.horizon
    }

    /// Checks `η = 0` on `(0, T/3)`, `η = 1` on `(2T/3, T)` and the derivative
    /// bound on `samples` equispaced times.
    pub fn verify(&self, samples: usize) -> TemporalCertificate {
        let t = self.horizon;
        let mut worst: f64 = 0.0;
        let mut violations = 0;
        for k in 1..samples {
            let s = t * k as f64 / samples as f64;
            let e = self.eta(s);
            let d = self.eta_prime(s);
            if s < t / 3.0 && e != 0.0 || s > 2.0 * t / 3.0 && e != 1.0 {
                violations += 1;
            }
            if e > 0.0 {
                let r = t * d.abs() / e.powf(self.kappa);
                worst = worst.max(r);
                if r > self.c_kappa * (1.0 + 1e-9) {
                    violations += 1;
                }
            } else if d != 0.0 {
                violations += 1;
            }
        }
        TemporalCertificate {
            samples,
            max_ratio: worst,
            c_kappa: self.c_kappa,
            violations,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalCertificate {
    pub samples: usize,
    pub max_ratio: f64,
    pub c_kappa: f64,
    pub violations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CoverMode {
    /// Cubic lattice through the macro centre.
    Lattice,
    /// Randomly shifted lattice with each centre moved by at most `R/4`.
    Jittered { seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSpec {
    pub centre: [f64; 3],
    pub macro_radius: f64,
    pub scale: f64,
    pub k1: usize,
    pub k2: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub mode: CoverMode,
}

fn default_rho() -> f64 {
    0.75
}

impl CoverSpec {
    /// Macro ball of radius `L/4` at the box centre.
    pub fn centred(grid: &GridSpec, scale_fraction: f64, k1: usize, k2: usize, mode: CoverMode) -> Self {
        let l = grid.box_length();
        Self {
            centre: [0.5 * l; 3],
            macro_radius: 0.25 * l,
            scale: 0.25 * l * scale_fraction,
            k1,
            k2,
            rho: default_rho(),
            mode,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverCertificate {
    pub count: usize,
    /// `(R₀/R)³`.
    pub lower_bound: f64,
    /// `K₁ (R₀/R)³`.
    pub upper_bound: f64,
    pub grid_points_checked: usize,
    /// Fewest balls `B(x_i, R)` over grid points of the macro ball.
    pub min_coverage: usize,
    /// Most balls `B(x_i, 2R)` over grid points of the macro ball.
    pub max_multiplicity: usize,
    pub min_feasible_k1: usize,
}

/// A verified `(K₁, K₂)`-cover of the macro ball at scale `R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    pub spec: CoverSpec,
    pub centres: Vec<[f64; 3]>,
    pub spacing: f64,
    pub profile: CutoffProfile,
    pub certificate: CoverCertificate,
}

/// Cube `[m − ½, m + ½]·s` (relative to the macro centre) meets the ball
/// of radius `r0`.
fn cell_meets_ball(rel: [f64; 3], s: f64, r0: f64) -> bool {
    let d2: f64 = rel
        .iter()
        .map(|&x| {
            let d = (x.abs() - 0.5 * s).max(0.0);
            d * d
        })
        .sum();
    d2 < r0 * r0
}

/// Builds and verifies a cover. Centres lie on a cubic lattice whose cells
/// have half-diagonal at most `R` (less the jitter); every lattice cell
/// meeting the macro ball contributes its centre, so coverage holds in the
/// continuum and is re-checked on grid points.
pub fn build_cover(grid: &GridSpec, spec: &CoverSpec) -> Result<Cover> {
    let (r0, r) = (spec.macro_radius, spec.scale);
    if !(r0 > 0.0) || !(r > 0.0 && r <= r0 * (1.0 + 1e-12)) {
        return Err(invalid("scale", format!("need 0 < R <= R0, got R = {r}, R0 = {r0}")));
    }
    if 4.0 * r0 > grid.box_length() * (1.0 + 1e-12) {
        return Err(invalid("macro_radius", "B(c, 2R0) must fit in the box"));
    }
    if spec.k1 == 0 || spec.k2 == 0 {
        return Err(invalid("k1/k2", "must be positive"));
    }
    let profile = CutoffProfile::new(spec.rho)?;
    let c = spec.centre;
    let (centres, spacing) = if r >= r0 * (1.0 - 1e-12) {
        (vec![c], 0.0)
    } else {
        let (jitter, shift, mut rng) = match spec.mode {
            CoverMode::Lattice => (0.0, [0.0; 3], None),
            CoverMode::Jittered { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = 2.0 * (r - 0.25 * r) / 3f64.sqrt();
                let shift = [0, 1, 2].map(|_| (rng.gen::<f64>() - 0.5) * s);
                (0.25 * r, shift, Some(rng))
            }
        };
        let s = 2.0 * (r - jitter) / 3f64.sqrt();
        let m = (r0 / s).ceil() as i64 + 1;
        let mut out = Vec::new();
        for k in -m..=m {
            for j in -m..=m {
                for i in -m..=m {
                    let rel = [
                        i as f64 * s + shift[0],
                        j as f64 * s + shift[1],
                        k as f64 * s + shift[2],
                    ];
                    if !cell_meets_ball(rel, s, r0) {
                        continue;
                    }
                    let mut p = [c[0] + rel[0], c[1] + rel[1], c[2] + rel[2]];
                    if let Some(rng) = rng.as_mut() {
                        // uniform in the ball of radius `jitter`
                        loop {
                            let v = [0, 1, 2].map(|_| 2.0 * rng.gen::<f64>() - 1.0);
                            if v[0] * v[0] + v[1] * v[1] + v[2] * v[2] <= 1.0 {
                                for a in 0..3 {
                                    p[a] += jitter * v[a];
                                }
                                break;
                            }
                        }
                    }
                    out.push(p);
                }
            }
        }
        (out, s)
    };
    let certificate = certify(grid, spec, &centres);
    let mut violated = Vec::new();
    if (certificate.count as f64) < certificate.lower_bound * (1.0 - 1e-12) {
        violated.push(format!("n = {} < (R0/R)^3 = {:.3}", certificate.count, certificate.lower_bound));
    }
    if certificate.count as f64 > certificate.upper_bound * (1.0 + 1e-12) {
        violated.push(format!(
            "n = {} > K1 (R0/R)^3 = {:.3}",
            certificate.count, certificate.upper_bound
        ));
    }
    if certificate.min_coverage == 0 {
        violated.push("a grid point of B(c, R0) lies in no ball B(x_i, R)".into());
    }
    if certificate.max_multiplicity > spec.k2 {
        violated.push(format!(
            "multiplicity {} of balls B(x_i, 2R) exceeds K2 = {}",
            certificate.max_multiplicity, spec.k2
        ));
    }
    if !violated.is_empty() {
        return Err(Error::CoverInfeasible {
            violated: violated.join("; "),
            min_k1: certificate.min_feasible_k1,
            min_k2: certificate.max_multiplicity,
        });
    }
    Ok(Cover {
        spec: spec.clone(),
        centres,
        spacing,
        profile,
        certificate,
    })
}

fn certify(grid: &GridSpec, spec: &CoverSpec, centres: &[[f64; 3]]) -> CoverCertificate {
    let (r0, r) = (spec.macro_radius, spec.scale);
    let ratio = (r0 / r).powi(3);
    let pts: Vec<[f64; 3]> = (0..grid.len())
        .map(|i| grid.point(i))
        .filter(|&p| norm(grid.periodic_delta(spec.centre, p)) <= r0)
        .collect();
    let counts: Vec<(usize, usize)> = pts
        .par_iter()
        .map(|&p| {
            let mut inner = 0;
            let mut outer = 0;
            for &x in centres {
                let d = norm(grid.periodic_delta(x, p));
                if d <= r {
                    inner += 1;
                }
                if d < 2.0 * r {
                    outer += 1;
                }
            }
            (inner, outer)
        })
        .collect();
    CoverCertificate {
        count: centres.len(),
        lower_bound: ratio,
        upper_bound: spec.k1 as f64 * ratio,
        grid_points_checked: pts.len(),
        min_coverage: counts.iter().map(|c| c.0).min().unwrap_or(0),
        max_multiplicity: counts.iter().map(|c| c.1).max().unwrap_or(0),
        min_feasible_k1: ((centres.len() as f64 / ratio) * (1.0 - 1e-12)).ceil().max(1.0) as usize,
    }
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Grid samples of one cutoff on its support.
#[derive(Clone, Debug)]
pub struct ElementCutoff {
    pub centre: [f64; 3],
    pub radius: f64,
    pub index: Vec<u32>,
    pub value: Vec<f64>,
    pub gradient: Vec<[f64; 3]>,
    pub laplacian: Vec<f64>,
}

impl ElementCutoff {
    /// `ψ(x) = Ψ(|x − centre| / R)` sampled with minimum-image distances.
    pub fn new(grid: &GridSpec, profile: &CutoffProfile, centre: [f64; 3], radius: f64) -> Self {
        let n = grid.n();
        let dx = grid.dx();
        let reach = (2.0 * radius / dx).ceil() as i64 + 1;
        let span = (2 * reach + 1).min(n as i64);
        let base = [0, 1, 2].map(|a| (centre[a] / dx).round() as i64 - if span == n as i64 { n as i64 / 2 } else { reach });
        let mut out = Self {
            centre,
            radius,
            index: Vec::new(),
            value: Vec::new(),
            gradient: Vec::new(),
            laplacian: Vec::new(),
        };
        let wrap = |v: i64| v.rem_euclid(n as i64) as usize;
        let mut idx: Vec<usize> = Vec::new();
        for k in 0..span {
            for j in 0..span {
                for i in 0..span {
                    idx.push(grid.index(wrap(base[0] + i), wrap(base[1] + j), wrap(base[2] + k)));
                }
            }
        }
        idx.sort_unstable();
        idx.dedup();
        for id in idx {
            let d = grid.periodic_delta(centre, grid.point(id));
            let rr = norm(d);
            let s = rr / radius;
            if s >= 2.0 {
                continue;
            }
            let (v, p1, p2) = profile.eval(s);
            if v == 0.0 {
                continue;
            }
            let (g, lap) = if rr > 0.0 && p1 != 0.0 {
                let f = p1 / (radius * rr);
                ([f * d[0], f * d[1], f * d[2]], (p2 + 2.0 * p1 / s) / (radius * radius))
            } else {
                ([0.0; 3], p2 / (radius * radius))
            };
            out.index.push(id as u32);
            out.value.push(v);
            out.gradient.push(g);
            out.laplacian.push(lap);
        }
        out
    }

    /// `∫ f ψ^δ`.
    pub fn integrate(&self, f: &[f64], exponent: f64, cell: f64) -> f64 {
        let s: f64 = if exponent == 1.0 {
            self.index.iter().zip(&self.value).map(|(&i, &v)| f[i as usize] * v).sum()
        } else {
            self.index
                .iter()
                .zip(&self.value)
                .map(|(&i, &v)| f[i as usize] * v.powf(exponent))
                .sum()
        };
        s * cell
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffCertificate {
    pub c_rho: f64,
    pub max_grad_ratio: f64,
    pub max_lap_ratio: f64,
    pub points_checked: usize,
    pub violations: usize,
}

/// Cutoffs of all cover elements.
#[derive(Clone, Debug)]
pub struct CutoffFamily {
    pub elements: Vec<ElementCutoff>,
    pub profile: CutoffProfile,
    pub scale: f64,
}

impl CutoffFamily {
    pub fn new(grid: &GridSpec, cover: &Cover) -> Self {
        let elements = cover
            .centres
            .par_iter()
            .map(|&c| ElementCutoff::new(grid, &cover.profile, c, cover.spec.scale))
            .collect();
        Self {
            elements,
            profile: cover.profile,
            scale: cover.spec.scale,
        }
    }

    /// Checks `|∇ψ_i| ≤ c_ρ ψ_i^ρ / R` and `|Δψ_i| ≤ c_ρ ψ_i^{2ρ−1} / R²` at
    /// every grid point where `ψ_i > 10⁻⁸`, plus `ψ_i ∈ [0, 1]` and
    /// `ψ_i = 1` on `B(x_i, R)`.
    pub fn verify(&self, grid: &GridSpec) -> CutoffCertificate {
        let rho = self.profile.rho;
        let r = self.scale;
        let c = self.profile.c_rho();
        let mut cert = CutoffCertificate {
            c_rho: c,
            max_grad_ratio: 0.0,
            max_lap_ratio: 0.0,
            points_checked: 0,
            violations: 0,
        };
        for e in &self.elements {
            for k in 0..e.index.len() {
                let v = e.value[k];
                if !(0.0..=1.0).contains(&v) {
                    cert.violations += 1;
                }
                let d = norm(grid.periodic_delta(e.centre, grid.point(e.index[k] as usize)));
                if d <= r && v != 1.0 {
                    cert.violations += 1;
                }
                if v <= 1e-8 {
                    continue;
                }
                cert.points_checked += 1;
                let g = e.gradient[k];
                let gr = r * norm(g) / v.powf(rho);
                let lr = r * r * e.laplacian[k].abs() / v.powf(2.0 * rho - 1.0);
                cert.max_grad_ratio = cert.max_grad_ratio.max(gr);
                cert.max_lap_ratio = cert.max_lap_ratio.max(lr);
                if gr > c * (1.0 + 1e-9) || lr > c * (1.0 + 1e-9) {
                    cert.violations += 1;
                }
            }
        }
        cert
    }

    /// Per-element `(1/R³) ∫ f ψ_i^δ`.
    pub fn localize(&self, f: &ScalarField, exponent: f64) -> Vec<f64> {
        let cell = f.grid().cell_volume();
        let r3 = self.scale.powi(3);
        self.elements
            .par_iter()
            .map(|e| e.integrate(f.values(), exponent, cell) / r3)
            .collect()
    }
}

/// Arithmetic mean, summed in sorted order so relabelling the elements does
/// not change the result.
pub fn ensemble_average(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

/// Macro-ball cutoff `ψ₀` on the full grid.
pub fn macro_cutoff(grid: &GridSpec, centre: [f64; 3], macro_radius: f64, rho: f64) -> Result<ScalarField> {
    let profile = CutoffProfile::new(rho)?;
    Ok(ScalarField::from_fn(*grid, |p| {
        profile.eval(norm(grid.periodic_delta(centre, p)) / macro_radius).0
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityAverage {
    pub scale: f64,
    pub ensemble: f64,
    /// `F₀ = (1/R₀³) ∫ f ψ₀^δ`.
    pub macro_average: f64,
    pub lower: f64,
    pub upper: f64,
    pub within: bool,
}

/// `⟨F⟩_R` for a density `f` with the sandwich `F₀/K₁ ≤ ⟨F⟩_R ≤ K₂ F₀`.
pub fn density_average(f: &ScalarField, cover: &Cover, exponent: f64) -> Result<DensityAverage> {
    let g = *f.grid();
    let fam = CutoffFamily::new(&g, cover);
    let ens = ensemble_average(&fam.localize(f, exponent));
    let psi0 = macro_cutoff(&g, cover.spec.centre, cover.spec.macro_radius, cover.spec.rho)?;
    let f0 = numeric::sum_indexed(g.len(), |i| f.values()[i] * psi0.values()[i].powf(exponent))
        * g.cell_volume()
        / cover.spec.macro_radius.powi(3);
    let lower = f0 / cover.spec.k1 as f64;
    let upper = cover.spec.k2 as f64 * f0;
    Ok(DensityAverage {
        scale: cover.spec.scale,
        ensemble: ens,
        macro_average: f0,
        lower,
        upper,
        within: ens >= lower && ens <= upper,
    })
}

/// Parameters shared by the trajectory diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    /// Macro radius `R₀`; defaults to `L/4`.
    #[serde(default)]
    pub macro_radius: Option<f64>,
    /// Macro centre; defaults to the box centre.
    #[serde(default)]
    pub centre: Option<[f64; 3]>,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Time horizon `T`; defaults to the last snapshot time.
    #[serde(default)]
    pub horizon: Option<f64>,
    /// Snapshots required in `[T/3, t]`.
    #[serde(default = "default_min_snapshots")]
    pub min_window_snapshots: usize,
}

fn default_kappa() -> f64 {
    0.5
}
fn default_min_snapshots() -> usize {
    8
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self {
            macro_radius: None,
            centre: None,
            rho: default_rho(),
            kappa: default_kappa(),
            horizon: None,
            min_window_snapshots: default_min_snapshots(),
        }
    }
}

impl CascadeConfig {
    pub fn macro_radius(&self, grid: &GridSpec) -> f64 {
        self.macro_radius.unwrap_or(0.25 * grid.box_length())
    }

    pub fn centre(&self, grid: &GridSpec) -> [f64; 3] {
        self.centre.unwrap_or([0.5 * grid.box_length(); 3])
    }

    pub fn cover_spec(&self, grid: &GridSpec, scale: f64, k1: usize, k2: usize, mode: CoverMode) -> CoverSpec {
        CoverSpec {
            centre: self.centre(grid),
            macro_radius: self.macro_radius(grid),
            scale,
            k1,
            k2,
            rho: self.rho,
            mode,
        }
    }
}

/// Snapshot indices `0..=k` with `times[k] = t`, and the temporal cutoff.
fn time_window(traj: &Trajectory, t: f64, cfg: &CascadeConfig) -> Result<(usize, TemporalCutoff)> {
    let times = traj.times();
    let horizon = cfg.horizon.or(times.last().copied()).unwrap_or(0.0);
    let eta = TemporalCutoff::new(horizon, cfg.kappa)?;
    let tol = 1e-9 * horizon.max(1.0);
    if !(t > 2.0 * horizon / 3.0 && t <= horizon + tol) {
        return Err(invalid("t", format!("must lie in (2T/3, T] with T = {horizon}, got {t}")));
    }
    let k = times
        .iter()
        .position(|&s| (s - t).abs() <= tol)
        .ok_or_else(|| invalid("t", format!("{t} is not a snapshot time")))?;
    if times[0].abs() > tol {
        return Err(Error::InsufficientSnapshots("trajectory must start at t = 0".into()));
    }
    let in_window = times[..=k].iter().filter(|&&s| s >= horizon / 3.0 - tol).count();
    if in_window < cfg.min_window_snapshots {
        return Err(Error::InsufficientSnapshots(format!(
            "{in_window} snapshots in [T/3, t], need at least {}; store snapshots more often",
            cfg.min_window_snapshots
        )));
    }
    Ok((k, eta))
}

/// Per-element integrals at one snapshot.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct ElementTerms {
    /// `∫ (ω·∇)u·ω ψ`
    stretching: f64,
    /// `∫ |∇ω|² ψ`
    palinstrophy: f64,
    /// `∫ ½|ω|² ψ`
    enstrophy: f64,
    /// `∫ ½|ω|² Δψ`, evaluated as `∫ Δ(½|ω|²) ψ`
    enstrophy_lap: f64,
    /// `∫ ½|ω|² u·∇ψ`, evaluated as `−∫ (u·∇ ½|ω|²) ψ`
    transport: f64,
}

// Derivatives in the cutoff terms are moved onto the resolved fields by
// parts: on small elements the cutoff spans only a few cells and its
// sampled Laplacian is not a usable quadrature weight.
struct SnapshotFields {
    stretching: ScalarField,
    grad_sq: Vec<f64>,
    half_sq: Vec<f64>,
    lap_half_sq: Vec<f64>,
    advect_half_sq: Vec<f64>,
}

fn snapshot_fields(w: &VectorField, need_all: bool) -> Result<SnapshotFields> {
    let g = *w.grid();
    let stretching = stretching_density(w)?;
    let half_sq: Vec<f64> = (0..g.len())
        .map(|i| {
            let v = w.at(i);
            0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
        })
        .collect();
    if !need_all {
        return Ok(SnapshotFields {
            stretching,
            grad_sq: Vec::new(),
            half_sq,
            lap_half_sq: Vec::new(),
            advect_half_sq: Vec::new(),
        });
    }
    let mut grad_sq = vec![0.0; g.len()];
    for c in 0..3 {
        let d = gradient(&w.scalar(c))?;
        for (i, s) in grad_sq.iter_mut().enumerate() {
            let v = d.at(i);
            *s += v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        }
    }
    let e = ScalarField::new(g, half_sq.clone())?;
    let lap_half_sq = laplacian(&e)?.into_values();
    let grad_e = gradient(&e)?;
    let u = biot_savart(w)?.velocity;
    let advect_half_sq = (0..g.len())
        .map(|i| {
            let (a, b) = (u.at(i), grad_e.at(i));
            a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
        })
        .collect();
    Ok(SnapshotFields {
        stretching,
        grad_sq,
        half_sq,
        lap_half_sq,
        advect_half_sq,
    })
}

/// Element terms for every snapshot `0..=k` and every family.
fn element_series(traj: &Trajectory, k: usize, families: &[&CutoffFamily], need_all: bool) -> Result<Vec<Vec<Vec<ElementTerms>>>> {
    let cell = traj.grid().cell_volume();
    let mut out: Vec<Vec<Vec<ElementTerms>>> = families.iter().map(|_| Vec::with_capacity(k + 1)).collect();
    for w in &traj.snapshots()[..=k] {
        let f = snapshot_fields(w, need_all)?;
        for (fi, fam) in families.iter().enumerate() {
            let terms: Vec<ElementTerms> = fam
                .elements
                .par_iter()
                .map(|e| {
                    let mut t = ElementTerms {
                        stretching: e.integrate(f.stretching.values(), 1.0, cell),
                        enstrophy: e.integrate(&f.half_sq, 1.0, cell),
                        ..Default::default()
                    };
                    if need_all {
                        t.palinstrophy = e.integrate(&f.grad_sq, 1.0, cell);
                        t.enstrophy_lap = e.integrate(&f.lap_half_sq, 1.0, cell);
                        t.transport = -e.integrate(&f.advect_half_sq, 1.0, cell);
                    }
                    t
                })
                .collect();
            out[fi].push(terms);
        }
    }
    Ok(out)
}

fn time_integral(times: &[f64], values: &[f64]) -> f64 {
    numeric::trapezoid(times, values)
}

/// `VST_{x_i,R,t} = (1/t) ∫₀ᵗ (1/R³) ∫ (ω·∇)u·ω η ψ_i` for every element,
/// by trapezoid quadrature over the stored snapshots.
pub fn localized_vst(traj: &Trajectory, cover: &Cover, t: f64, cfg: &CascadeConfig) -> Result<Vec<f64>> {
    let fam = CutoffFamily::new(traj.grid(), cover);
    Ok(vst_for_families(traj, &[&fam], t, cfg)?.pop().unwrap())
}

fn vst_for_families(traj: &Trajectory, fams: &[&CutoffFamily], t: f64, cfg: &CascadeConfig) -> Result<Vec<Vec<f64>>> {
    let (k, eta) = time_window(traj, t, cfg)?;
    let times = &traj.times()[..=k];
    let etas: Vec<f64> = times.iter().map(|&s| eta.eta(s)).collect();
    let series = element_series(traj, k, fams, false)?;
    Ok(fams
        .iter()
        .zip(series)
        .map(|(fam, ser)| {
            let r3 = fam.scale.powi(3);
            (0..fam.elements.len())
                .map(|i| {
                    let vals: Vec<f64> = ser.iter().zip(&etas).map(|(s, e)| e * s[i].stretching).collect();
                    time_integral(times, &vals) / (t * r3)
                })
                .collect()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadReport {
    pub scale: f64,
    pub variants: usize,
    pub means: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `(max − min) / |mean| < 1/2`.
    pub stable: bool,
}

pub const MIN_VARIANTS: usize = 8;

fn spread_of(scale: f64, means: Vec<f64>) -> SpreadReport {
    let min = means.iter().copied().fold(f64::INFINITY, f64::min);
    let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = ensemble_average(&means);
    SpreadReport {
        scale,
        variants: means.len(),
        stable: mean != 0.0 && (max - min) / mean.abs() < 0.5,
        means,
        min,
        max,
        mean,
    }
}

/// Extremes of `⟨VST⟩_{R,t}` over jittered covers with seeds
/// `seed, seed + 1, …`.
pub fn rearrangement_spread(
    traj: &Trajectory,
    scale: f64,
    t: f64,
    k1: usize,
    k2: usize,
    variants: usize,
    seed: u64,
    cfg: &CascadeConfig,
) -> Result<SpreadReport> {
    if variants < MIN_VARIANTS {
        return Err(invalid("variants", format!("must be >= {MIN_VARIANTS}")));
    }
    let g = *traj.grid();
    let fams = jittered_families(&g, scale, k1, k2, variants, seed, cfg)?;
    let refs: Vec<&CutoffFamily> = fams.iter().collect();
    let vst = vst_for_families(traj, &refs, t, cfg)?;
    Ok(spread_of(scale, vst.iter().map(|v| ensemble_average(v)).collect()))
}

fn jittered_families(
    g: &GridSpec,
    scale: f64,
    k1: usize,
    k2: usize,
    variants: usize,
    seed: u64,
    cfg: &CascadeConfig,
) -> Result<Vec<CutoffFamily>> {
    (0..variants as u64)
        .map(|v| {
            let spec = cfg.cover_spec(g, scale, k1, k2, CoverMode::Jittered { seed: seed.wrapping_add(v) });
            Ok(CutoffFamily::new(g, &build_cover(g, &spec)?))
        })
        .collect()
}

/// Spread of the ensemble average of a fixed density over jittered covers.
pub fn density_spread(
    f: &ScalarField,
    scale: f64,
    k1: usize,
    k2: usize,
    variants: usize,
    seed: u64,
    cfg: &CascadeConfig,
) -> Result<SpreadReport> {
    if variants < MIN_VARIANTS {
        return Err(invalid("variants", format!("must be >= {MIN_VARIANTS}")));
    }
    let fams = jittered_families(f.grid(), scale, k1, k2, variants, seed, cfg)?;
    Ok(spread_of(
        scale,
        fams.iter().map(|fam| ensemble_average(&fam.localize(f, 1.0))).collect(),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacroQuantities {
    pub time: f64,
    pub macro_radius: f64,
    /// `E₀ₜ = (1/t) ∫₀ᵗ (1/R₀³) ∫ ½|ω|² φ₀^{1/2}`.
    pub e0t: f64,
    /// `(1/t) ∫₀ᵗ (1/R₀³) ∫ |∇ω|² φ₀ + (1/t)(1/R₀³) ∫ ½|ω(t)|² ψ₀`.
    pub p0t: f64,
    /// `(E₀ₜ / P₀ₜ)^{1/2}`; `None` when both vanish.
    pub sigma: Option<f64>,
    /// `sup_s ∫_{B(c, 2R₀)} |u|²` over stored snapshots.
    pub m0: f64,
    /// `P₀ₜ = 0` while `E₀ₜ > 0`.
    pub numerical_fault: bool,
}

pub fn macro_quantities(traj: &Trajectory, t: f64, cfg: &CascadeConfig) -> Result<MacroQuantities> {
    let g = *traj.grid();
    let (k, eta) = time_window(traj, t, cfg)?;
    let r0 = cfg.macro_radius(&g);
    let c = cfg.centre(&g);
    let psi0 = macro_cutoff(&g, c, r0, cfg.rho)?;
    let sqrt_psi0: Vec<f64> = psi0.values().iter().map(|v| v.sqrt()).collect();
    let inside: Vec<bool> = (0..g.len()).map(|i| norm(g.periodic_delta(c, g.point(i))) < 2.0 * r0).collect();
    let cell = g.cell_volume();
    let times = &traj.times()[..=k];
    let mut e_vals = Vec::with_capacity(k + 1);
    let mut p_vals = Vec::with_capacity(k + 1);
    let mut terminal = 0.0;
    let mut m0: f64 = 0.0;
    for (idx, w) in traj.snapshots().iter().enumerate() {
        let u = biot_savart(w)?.velocity;
        let ke = numeric::sum_indexed(g.len(), |i| {
            if inside[i] {
                let v = u.at(i);
                v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
            } else {
                0.0
            }
        }) * cell;
        m0 = m0.max(ke);
        if idx > k {
            continue;
        }
        let f = snapshot_fields(w, true)?;
        let s = times[idx];
        let en_half = numeric::sum_indexed(g.len(), |i| f.half_sq[i] * sqrt_psi0[i]) * cell;
        let pal = numeric::sum_indexed(g.len(), |i| f.grad_sq[i] * psi0.values()[i]) * cell;
        e_vals.push(eta.eta(s).sqrt() * en_half);
        p_vals.push(eta.eta(s) * pal);
        if idx == k {
            terminal = numeric::sum_indexed(g.len(), |i| f.half_sq[i] * psi0.values()[i]) * cell;
        }
    }
    let r03 = r0.powi(3);
    let e0t = time_integral(times, &e_vals) / (t * r03);
    let p0t = time_integral(times, &p_vals) / (t * r03) + terminal / (t * r03);
    let sigma = if p0t > 0.0 { Some((e0t / p0t).sqrt()) } else { None };
    Ok(MacroQuantities {
        time: t,
        macro_radius: r0,
        e0t,
        p0t,
        sigma,
        m0,
        numerical_fault: p0t == 0.0 && e0t > 0.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ScaleVerdict {
    /// `⟨VST⟩ > 0`; `Ĉ = max(⟨VST⟩/P₀ₜ, P₀ₜ/⟨VST⟩)`.
    Measured { c_hat: f64, within: bool },
    SignFail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub scale: f64,
    /// Inside the admissible range `[condition_lhs, R₀]`.
    pub in_range: bool,
    pub elements: usize,
    /// Lattice cover average.
    pub mean_vst: f64,
    /// Extremes over the lattice cover and the jittered variants.
    pub spread_min: f64,
    pub spread_max: f64,
    pub stable: bool,
    pub cutoff_violations: usize,
    /// Largest normalized budget residual over lattice elements.
    pub budget_residual: Option<f64>,
    pub verdict: ScaleVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalityReport {
    pub time: f64,
    pub constant: f64,
    pub k1: usize,
    pub k2: usize,
    pub macro_quantities: MacroQuantities,
    /// `C max{M₀^{1/2}, R₀^{1/2}} σ₀ₜ^{1/2}`.
    pub condition_lhs: Option<f64>,
    /// `condition_lhs < R₀`.
    pub condition_holds: bool,
    pub range: Option<[f64; 2]>,
    pub rows: Vec<ScaleRow>,
    /// All stretching integrals vanish: the flow has no vortex stretching.
    pub no_stretching: bool,
    pub notes: Vec<String>,
}

/// Options of [`cascade_report`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeRequest {
    pub k1: usize,
    pub k2: usize,
    /// The constant `C > 1` of the scale condition.
    pub constant: f64,
    pub variants: usize,
    pub seed: u64,
    /// Cover radii. Empty means the dyadic scales `R₀ 2^{-j}` of the
    /// admissible range, down to two grid cells.
    #[serde(default)]
    pub scales: Vec<f64>,
    #[serde(default)]
    pub budget: bool,
}

impl CascadeRequest {
    pub fn new(k1: usize, k2: usize, constant: f64) -> Self {
        Self {
            k1,
            k2,
            constant,
            variants: MIN_VARIANTS,
            seed: 0,
            scales: Vec::new(),
            budget: false,
        }
    }
}

pub const DEFAULT_K1: usize = 16;
pub const DEFAULT_K2: usize = 80;

/// Evaluates the scale condition and, on the admissible dyadic scales
/// `R₀ 2^{-j}`, the two-sided estimate of `⟨VST⟩_{R,t}` against `P₀ₜ`.
pub fn vst_locality_report(
    traj: &Trajectory,
    t: f64,
    k1: usize,
    k2: usize,
    constant: f64,
    variants: usize,
    seed: u64,
    cfg: &CascadeConfig,
) -> Result<LocalityReport> {
    let req = CascadeRequest {
        variants,
        seed,
        ..CascadeRequest::new(k1, k2, constant)
    };
    cascade_report(traj, t, &req, cfg)
}

/// Like [`vst_locality_report`], on the requested scales when given. Rows
/// outside the admissible range are still measured but flagged.
pub fn cascade_report(traj: &Trajectory, t: f64, req: &CascadeRequest, cfg: &CascadeConfig) -> Result<LocalityReport> {
    if !(req.constant > 1.0) {
        return Err(invalid("C", "must exceed 1"));
    }
    let g = *traj.grid();
    let mq = macro_quantities(traj, t, cfg)?;
    let r0 = mq.macro_radius;
    let mut notes = Vec::new();
    let lhs = mq
        .sigma
        .map(|s| req.constant * mq.m0.sqrt().max(r0.sqrt()) * s.sqrt());
    let holds = lhs.is_some_and(|l| l < r0);
    let range = if holds { Some([lhs.unwrap(), r0]) } else { None };
    let scales: Vec<f64> = if !req.scales.is_empty() {
        if !holds {
            notes.push("scale condition fails: admissible range is empty, rows are outside it".into());
        }
        req.scales.clone()
    } else if holds {
        let floor = lhs.unwrap().max(2.0 * g.dx());
        if floor > lhs.unwrap() {
            notes.push(format!("range truncated at two grid cells ({floor})"));
        }
        (0..).map(|j| r0 / 2f64.powi(j)).take_while(|&r| r >= floor).collect()
    } else {
        notes.push("scale condition fails: admissible range is empty, no verdicts".into());
        Vec::new()
    };
    let mut rows = Vec::new();
    let mut all_zero = true;
    for &r in &scales {
        let lattice = build_cover(&g, &cfg.cover_spec(&g, r, req.k1, req.k2, CoverMode::Lattice))?;
        let mut fams = vec![CutoffFamily::new(&g, &lattice)];
        let cutoff_violations = fams[0].verify(&g).violations;
        if r < r0 * (1.0 - 1e-12) {
            fams.extend(jittered_families(&g, r, req.k1, req.k2, req.variants.max(MIN_VARIANTS), req.seed, cfg)?);
        }
        let refs: Vec<&CutoffFamily> = fams.iter().collect();
        let vst = vst_for_families(traj, &refs, t, cfg)?;
        drop(fams);
        if vst.iter().flatten().any(|&v| v != 0.0) {
            all_zero = false;
        }
        let means: Vec<f64> = vst.iter().map(|v| ensemble_average(v)).collect();
        let spread = spread_of(r, means.clone());
        let mean = means[0];
        let verdict = if mean > 0.0 {
            let c_hat = (mean / mq.p0t).max(mq.p0t / mean);
            ScaleVerdict::Measured {
                c_hat,
                within: c_hat <= req.constant,
            }
        } else {
            ScaleVerdict::SignFail
        };
        let budget_residual = if req.budget {
            let b = enstrophy_budget(traj, &lattice, t, cfg)?;
            Some(b.iter().map(|x| x.residual.abs()).fold(0.0, f64::max))
        } else {
            None
        };
        rows.push(ScaleRow {
            scale: r,
            in_range: range.is_some_and(|[lo, hi]| r >= lo && r <= hi * (1.0 + 1e-12)),
            elements: lattice.centres.len(),
            mean_vst: mean,
            spread_min: spread.min,
            spread_max: spread.max,
            stable: spread.stable,
            cutoff_violations,
            budget_residual,
            verdict,
        });
    }
    if scales.is_empty() {
        // no rows to inspect; the single macro-scale element decides
        let whole = build_cover(&g, &cfg.cover_spec(&g, r0, req.k1, req.k2, CoverMode::Lattice))?;
        let fam = CutoffFamily::new(&g, &whole);
        all_zero = vst_for_families(traj, &[&fam], t, cfg)?.iter().flatten().all(|&v| v == 0.0);
    }
    let no_stretching = all_zero;
    if no_stretching {
        notes.push("vortex stretching vanishes identically; the two-sided estimate does not apply".into());
    }
    Ok(LocalityReport {
        time: t,
        constant: req.constant,
        k1: req.k1,
        k2: req.k2,
        macro_quantities: mq,
        condition_lhs: lhs,
        condition_holds: holds,
        range,
        rows,
        no_stretching,
        notes,
    })
}

/// Terms of the localized enstrophy balance for one element, with the
/// viscosity `ν` of the run on the dissipative terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetTerms {
    pub element: usize,
    /// `∫₀ᵗ ∫ (ω·∇)u·ω φ_i`
    pub stretching: f64,
    /// `∫ ½|ω(t)|² ψ_i`
    pub terminal: f64,
    /// `ν ∫₀ᵗ ∫ |∇ω|² φ_i`
    pub dissipation: f64,
    /// `∫₀ᵗ ∫ ½|ω|² ((φ_i)_s + ν Δφ_i)`
    pub cutoff: f64,
    /// `∫₀ᵗ ∫ ½|ω|² u·∇φ_i`
    pub transport: f64,
    /// `(LHS − RHS) / max |term|`.
    pub residual: f64,
}

pub fn enstrophy_budget(traj: &Trajectory, cover: &Cover, t: f64, cfg: &CascadeConfig) -> Result<Vec<BudgetTerms>> {
    let g = *traj.grid();
    let nu = g.viscosity();
    let (k, eta) = time_window(traj, t, cfg)?;
    let fam = CutoffFamily::new(&g, cover);
    let series = element_series(traj, k, &[&fam], true)?.pop().unwrap();
    let times = &traj.times()[..=k];
    let etas: Vec<f64> = times.iter().map(|&s| eta.eta(s)).collect();
    let detas: Vec<f64> = times.iter().map(|&s| eta.eta_prime(s)).collect();
    Ok((0..fam.elements.len())
        .map(|i| {
            let col = |f: &dyn Fn(usize) -> f64| -> f64 {
                let v: Vec<f64> = (0..times.len()).map(f).collect();
                time_integral(times, &v)
            };
            let stretching = col(&|s| etas[s] * series[s][i].stretching);
            let dissipation = nu * col(&|s| etas[s] * series[s][i].palinstrophy);
            let cutoff = col(&|s| detas[s] * series[s][i].enstrophy + nu * etas[s] * series[s][i].enstrophy_lap);
            let transport = col(&|s| etas[s] * series[s][i].transport);
            let terminal = etas[k] * series[k][i].enstrophy;
            let rhs = terminal + dissipation - cutoff - transport;
            let scale = [stretching, terminal, dissipation, cutoff, transport]
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            BudgetTerms {
                element: i,
                stretching,
                terminal,
                dissipation,
                cutoff,
                transport,
                residual: if scale > 0.0 { (stretching - rhs) / scale } else { 0.0 },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::SolverConfig;

    fn grid(n: usize) -> GridSpec {
        GridSpec::periodic(n, 0.05).unwrap()
    }

    #[test]
    fn smoothstep_derivatives() {
        for k in 1..100 {
            let t = k as f64 / 100.0;
            let h = 1e-6;
            let fd1 = (smoothstep(t + h) - smoothstep(t - h)) / (2.0 * h);
            let fd2 = (smoothstep_d1(t + h) - smoothstep_d1(t - h)) / (2.0 * h);
            assert!((fd1 - smoothstep_d1(t)).abs() < 1e-7);
            assert!((fd2 - smoothstep_d2(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn profile_derivatives_match_differences() {
        let p = CutoffProfile::new(0.75).unwrap();
        for k in 1..50 {
            let s = 1.0 + k as f64 / 50.0;
            let h = 1e-5;
            let (_, d1, d2) = p.eval(s);
            let fd1 = (p.eval(s + h).0 - p.eval(s - h).0) / (2.0 * h);
            let fd2 = (p.eval(s + h).1 - p.eval(s - h).1) / (2.0 * h);
            assert!((fd1 - d1).abs() < 1e-7 * (1.0 + d1.abs()));
            assert!((fd2 - d2).abs() < 1e-6 * (1.0 + d2.abs()));
        }
        assert!(CutoffProfile::new(0.5).is_err());
        assert!(CutoffProfile::new(1.0).is_err());
    }

    #[test]
    fn temporal_cutoff_bounds() {
        for kappa in [0.25, 0.5, 0.75] {
            let eta = TemporalCutoff::new(3.0, kappa).unwrap();
            let cert = eta.verify(10_000);
            assert_eq!(cert.violations, 0, "{kappa} {cert:?}");
            assert!(cert.max_ratio <= cert.c_kappa);
        }
    }

    #[test]
    fn single_ball_at_macro_scale() {
        let g = grid(32);
        let spec = CoverSpec::centred(&g, 1.0, 1, 1, CoverMode::Lattice);
        let c = build_cover(&g, &spec).unwrap();
        assert_eq!(c.centres.len(), 1);
        assert_eq!(c.certificate.max_multiplicity, 1);
    }

    #[test]
    fn infeasible_cover_reports_minimum() {
        let g = grid(32);
        let spec = CoverSpec::centred(&g, 0.5, 1, 1, CoverMode::Lattice);
        match build_cover(&g, &spec) {
            Err(Error::CoverInfeasible { min_k1, min_k2, violated }) => {
                assert!(min_k1 > 1, "{violated}");
                assert!(min_k2 > 1);
                let ok = CoverSpec::centred(&g, 0.5, min_k1, min_k2, CoverMode::Lattice);
                build_cover(&g, &ok).unwrap();
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn jitter_is_reproducible() {
        let g = grid(32);
        let spec = CoverSpec::centred(&g, 0.5, 100, 100, CoverMode::Jittered { seed: 7 });
        let a = build_cover(&g, &spec).unwrap();
        let b = build_cover(&g, &spec).unwrap();
        assert_eq!(a.centres, b.centres);
        let other = CoverSpec::centred(&g, 0.5, 100, 100, CoverMode::Jittered { seed: 8 });
        assert_ne!(build_cover(&g, &other).unwrap().centres, a.centres);
    }

    #[test]
    fn cutoffs_satisfy_bounds() {
        let g = grid(32);
        for frac in [1.0, 0.5, 0.25] {
            let cover = build_cover(&g, &CoverSpec::centred(&g, frac, 100, 100, CoverMode::Lattice)).unwrap();
            let cert = CutoffFamily::new(&g, &cover).verify(&g);
            assert_eq!(cert.violations, 0, "{frac} {cert:?}");
            assert!(cert.points_checked > 0);
        }
    }

    #[test]
    fn ensemble_of_equal_values() {
        assert_eq!(ensemble_average(&[0.3; 7]), 0.3);
        let a = [0.1, 0.7, -0.2, 1e-9, 3.0];
        let b = [3.0, 1e-9, 0.1, -0.2, 0.7];
        assert_eq!(ensemble_average(&a).to_bits(), ensemble_average(&b).to_bits());
    }

    #[test]
    fn unit_density_average_equals_macro() {
        let g = grid(32);
        let f = ScalarField::constant(g, 1.0);
        for frac in [1.0, 0.5, 0.25] {
            let cover = build_cover(&g, &CoverSpec::centred(&g, frac, 100, 100, CoverMode::Lattice)).unwrap();
            let d = density_average(&f, &cover, 1.0).unwrap();
            assert!(d.within);
            // grid sums of ψ differ slightly between scales
            assert!((d.ensemble / d.macro_average - 1.0).abs() < 0.05, "{frac} {d:?}");
        }
    }

    fn zero_trajectory() -> Trajectory {
        let g = grid(16);
        let w = VectorField::zeros(g);
        let snaps = (0..=20).map(|k| (0.05 * k as f64, w.clone())).collect();
        Trajectory::from_snapshots(SolverConfig::new(g, 1.0, 0.05), snaps).unwrap()
    }

    #[test]
    fn zero_trajectory_is_quiet() {
        let traj = zero_trajectory();
        let g = *traj.grid();
        let cfg = CascadeConfig::default();
        let cover = build_cover(&g, &cfg.cover_spec(&g, 0.25 * g.box_length(), 1, 1, CoverMode::Lattice)).unwrap();
        assert!(localized_vst(&traj, &cover, 1.0, &cfg).unwrap().iter().all(|&v| v == 0.0));
        let mq = macro_quantities(&traj, 1.0, &cfg).unwrap();
        assert_eq!((mq.e0t, mq.p0t, mq.m0), (0.0, 0.0, 0.0));
        assert!(mq.sigma.is_none());
        for b in enstrophy_budget(&traj, &cover, 1.0, &cfg).unwrap() {
            assert_eq!(b.residual, 0.0);
        }
    }

    #[test]
    fn window_checks() {
        let traj = zero_trajectory();
        let cfg = CascadeConfig::default();
        assert!(macro_quantities(&traj, 0.5, &cfg).is_err());
        assert!(macro_quantities(&traj, 0.72, &cfg).is_err());
        let sparse = CascadeConfig {
            min_window_snapshots: 30,
            ..CascadeConfig::default()
        };
        assert!(matches!(
            macro_quantities(&traj, 1.0, &sparse),
            Err(Error::InsufficientSnapshots(_))
        ));
    }
}
