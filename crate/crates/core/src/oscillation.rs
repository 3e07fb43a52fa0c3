//! Harmonic-analysis diagnostics: distribution functions, the `L log L`
//! functional, maximal functions, mean-oscillation norms, the
//! vorticity-direction monitor and two sampling suites.
//!
//! Suprema over cubes are taken over a finite ladder of sides and a strided
//! set of centres, so every reported norm is a lower bound of the true one.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{gradient, GridSpec, ScalarField, SpectralField, VectorField};
use crate::numeric;
use crate::scenario::{generate, project, tube_field, Axis, Scenario, ScenarioKind};
use crate::solver::Trajectory;

/// `w = √(1 + |ω|²)` and `log w`.
#[derive(Clone, Debug)]
pub struct WField {
    w: ScalarField,
    log_w: ScalarField,
}

impl WField {
    pub fn new(omega: &VectorField) -> Self {
        let m2: Vec<f64> = (0..omega.grid().len())
            .map(|i| {
                let v = omega.at(i);
                v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
            })
            .collect();
        let g = *omega.grid();
        let w = m2.iter().map(|&s| (1.0 + s).sqrt()).collect();
        let log_w = m2.iter().map(|&s| 0.5 * s.ln_1p()).collect();
        Self {
            w: ScalarField::from_vec_unchecked(g, w),
            log_w: ScalarField::from_vec_unchecked(g, log_w),
        }
    }

    pub fn w(&self) -> &ScalarField {
        &self.w
    }

    pub fn log_w(&self) -> &ScalarField {
        &self.log_w
    }
}

/// `λ_f(β) = Δx³ · #{x : |f(x)| > β}` for ascending positive `β`.
pub fn distribution_function(f: &ScalarField, betas: &[f64]) -> Result<Vec<f64>> {
    if betas.iter().any(|&b| !(b > 0.0)) {
        return Err(invalid("beta", "values must be positive"));
    }
    if betas.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("beta", "values must be ascending"));
    }
    let mut abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let dv = f.grid().cell_volume();
    Ok(betas
        .iter()
        .map(|&b| {
            let at_most = abs.partition_point(|&v| v <= b);
            (abs.len() - at_most) as f64 * dv
        })
        .collect())
}

/// `∫ ψ w log w` by grid quadrature.
pub fn llogl(omega: &VectorField, psi: &ScalarField) -> Result<f64> {
    omega.grid().check_same(psi.grid())?;
    let wf = WField::new(omega);
    let w = wf.w.values();
    let lw = wf.log_w.values();
    let p = psi.values();
    Ok(numeric::sum_indexed(w.len(), |i| p[i] * w[i] * lw[i]) * omega.grid().cell_volume())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaximalVariant {
    /// Smooth kernel, radii `2^{-j}`, `j ≥ −2`.
    Global,
    /// Smooth kernel, radii below one.
    Local,
    /// Cube averages of `|f|`.
    HardyLittlewood,
    /// `(M √|f|)²` with cube averages.
    Curly,
}

/// Radii `2^{-j}` down to the grid spacing.
pub fn maximal_radii(grid: &GridSpec, variant: MaximalVariant) -> Vec<f64> {
    let j0 = match variant {
        MaximalVariant::Local => 1,
        _ => -2,
    };
    (j0..)
        .map(|j| 2f64.powi(-j))
        .take_while(|&r| r >= grid.dx())
        .collect()
}

fn bump(s: f64) -> f64 {
    if s < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

/// Periodized `h_t(x) = t⁻³ h(x/t)` for the smooth radial bump `h` supported
/// in the unit ball, normalized so its grid integral is one.
pub fn smooth_kernel(grid: &GridSpec, t: f64) -> ScalarField {
    let g = *grid;
    let n = g.n();
    let l = g.box_length();
    let images = (t / l).ceil() as i64;
    let vals: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = g.unflatten(idx);
            // minimum-image offset from the origin
            let q = [i, j, k].map(|v| {
                let m = if v >= n / 2 { v as f64 - n as f64 } else { v as f64 };
                m * g.dx()
            });
            let mut s = 0.0;
            for a in -images..=images {
                for b in -images..=images {
                    for c in -images..=images {
                        let d = [q[0] + a as f64 * l, q[1] + b as f64 * l, q[2] + c as f64 * l];
                        s += bump((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() / t);
                    }
                }
            }
            s
        })
        .collect();
    let total = numeric::sum(&vals) * g.cell_volume();
    if total > 0.0 {
        ScalarField::from_vec_unchecked(g, vals.iter().map(|v| v / total).collect())
    } else {
        // sub-grid support: a point mass at the origin
        let mut v = vec![0.0; g.len()];
        v[0] = 1.0 / g.cell_volume();
        ScalarField::from_vec_unchecked(g, v)
    }
}

fn convolve(f_hat: &SpectralField, kernel: &ScalarField) -> ScalarField {
    let k_hat = SpectralField::forward(kernel);
    let dv = kernel.grid().cell_volume();
    let coeffs: Vec<Complex64> = f_hat
        .coeffs()
        .iter()
        .zip(k_hat.coeffs())
        .map(|(a, b)| a * b * dv)
        .collect();
    SpectralField::new(*kernel.grid(), coeffs)
        .expect("same grid")
        .to_physical()
}

/// Periodic moving sum over `2hw + 1` points along `axis`; the whole axis
/// when the window reaches the period.
fn moving_sum(values: &[f64], n: usize, axis: usize, hw: usize) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    let stride = [1, n, n * n][axis];
    let width = 2 * hw + 1;
    let lines: Vec<usize> = (0..values.len())
        .filter(|&idx| (idx / stride).is_multiple_of(n))
        .collect();
    let results: Vec<(usize, Vec<f64>)> = lines
        .par_iter()
        .map(|&base| {
            let line: Vec<f64> = (0..n).map(|i| values[base + i * stride]).collect();
            let mut res = vec![0.0; n];
            if width >= n {
                let s: f64 = line.iter().sum();
                res.iter_mut().for_each(|r| *r = s);
            } else {
                for (i, r) in res.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for d in 0..width {
                        s += line[(i + n + d - hw) % n];
                    }
                    *r = s;
                }
            }
            (base, res)
        })
        .collect();
    for (base, res) in results {
        for (i, r) in res.into_iter().enumerate() {
            out[base + i * stride] = r;
        }
    }
    out
}

/// Averages of `values` over the cubes of `(2hw+1)³` points centred at each
/// grid point.
fn box_average(values: &[f64], n: usize, hw: usize) -> Vec<f64> {
    let count = (2 * hw + 1).min(n) as f64;
    let mut v = values.to_vec();
    for axis in 0..3 {
        v = moving_sum(&v, n, axis, hw);
    }
    let denom = count * count * count;
    v.iter_mut().for_each(|x| *x /= denom);
    v
}

/// `sup_t |f * h_t|` (smooth variants) or `sup_r ⨍_{cube} |f|` over the
/// radius ladder, including the scale-zero limit `|f|`.
pub fn maximal_function(f: &ScalarField, variant: MaximalVariant) -> Result<ScalarField> {
    f.check_finite()?;
    let g = *f.grid();
    let n = g.n();
    let radii = maximal_radii(&g, variant);
    let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let out = match variant {
        MaximalVariant::Global | MaximalVariant::Local => {
            let f_hat = SpectralField::forward(f);
            let mut sup = abs.clone();
            for &t in &radii {
                let c = convolve(&f_hat, &smooth_kernel(&g, t));
                for (s, v) in sup.iter_mut().zip(c.values()) {
                    *s = s.max(v.abs());
                }
            }
            sup
        }
        MaximalVariant::HardyLittlewood => hl_sup(&abs, n, &g, &radii),
        MaximalVariant::Curly => {
            let root: Vec<f64> = abs.iter().map(|v| v.sqrt()).collect();
            hl_sup(&root, n, &g, &radii).into_iter().map(|v| v * v).collect()
        }
    };
    Ok(ScalarField::from_vec_unchecked(g, out))
}

fn hl_sup(abs: &[f64], n: usize, g: &GridSpec, radii: &[f64]) -> Vec<f64> {
    let mut sup = abs.to_vec();
    let mut seen = Vec::new();
    for &r in radii {
        let hw = ((r / g.dx()) + 1e-9).floor() as usize;
        let hw = hw.min(n / 2);
        if hw == 0 || seen.contains(&hw) {
            continue;
        }
        seen.push(hw);
        for (s, v) in sup.iter_mut().zip(box_average(abs, n, hw)) {
            *s = s.max(v);
        }
    }
    sup
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    One,
    InverseLog,
}

impl Weight {
    pub fn phi(self, r: f64) -> f64 {
        match self {
            Weight::One => 1.0,
            Weight::InverseLog => 1.0 / r.ln().abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "weight", rename_all = "snake_case")]
pub enum BmoVariant {
    /// Global mean-oscillation norm.
    Bmo,
    /// Small-scale oscillation plus large-scale averages of `|f|`.
    LocalBmo,
    /// `‖f‖₁ + sup_{r < ½} Ω(f, I(x, r)) / φ(r)`.
    Weighted(Weight),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationConfig {
    /// Cube sides, ascending, inside `(Δx, ½)`.
    pub radii: Vec<f64>,
    /// Stride between cube centres at the smallest side.
    pub center_stride: usize,
    /// Split between small and large scales for the local norm.
    #[serde(default = "half")]
    pub bmo_delta: f64,
}

fn half() -> f64 {
    0.5
}

pub const MIN_CENTERS_PER_AXIS: usize = 8;

impl OscillationConfig {
    /// Dyadic sides `2^{-j}` in `(Δx, ½)` and sixteen centres per axis.
    pub fn for_grid(grid: &GridSpec) -> Self {
        let mut radii: Vec<f64> = (2..)
            .map(|j| 2f64.powi(-j))
            .take_while(|&r| r > grid.dx())
            .collect();
        radii.reverse();
        Self {
            radii,
            center_stride: (grid.n() / 16).max(1),
            bmo_delta: 0.5,
        }
    }

    /// Same ladder restricted to sides `≥ r_min`.
    pub fn truncated(&self, r_min: f64) -> Self {
        Self {
            radii: self.radii.iter().copied().filter(|&r| r >= r_min).collect(),
            ..self.clone()
        }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if self.radii.is_empty() {
            return Err(invalid(
                "radii",
                format!("ladder is empty; no dyadic side fits in (Δx, 1/2) with Δx = {}", grid.dx()),
            ));
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("radii", "must be strictly ascending"));
        }
        if self.radii.iter().any(|&r| !(r > grid.dx() && r < 0.5)) {
            return Err(invalid("radii", format!("must lie in (Δx, 1/2) = ({}, 0.5)", grid.dx())));
        }
        if self.center_stride == 0 || grid.n() / self.center_stride < MIN_CENTERS_PER_AXIS {
            return Err(invalid(
                "center_stride",
                format!("gives fewer than {MIN_CENTERS_PER_AXIS} centres per axis"),
            ));
        }
        if !(self.bmo_delta > 0.0) {
            return Err(invalid("bmo_delta", "must be positive"));
        }
        Ok(())
    }
}

/// Sup over centres of one cube side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusSup {
    pub side: f64,
    pub points_per_axis: usize,
    pub centers_per_axis: usize,
    /// `sup Ω(f, I)`.
    pub oscillation: f64,
    /// `sup ⨍_I |f|`.
    pub mean_abs: f64,
    pub weight: f64,
    pub argmax: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BmoReport {
    pub variant: BmoVariant,
    pub l1_norm: f64,
    /// Small-scale oscillation term (weighted where applicable).
    pub oscillation_part: f64,
    /// Large-scale average term of the local norm.
    pub large_scale_part: f64,
    pub norm: f64,
    pub small_scales: Vec<RadiusSup>,
    pub large_scales: Vec<RadiusSup>,
    /// Suprema are over a finite set of cubes.
    pub lower_bound: bool,
}

struct CubeStats {
    oscillation: f64,
    mean_abs: f64,
}

fn cube_stats(values: &[f64], n: usize, centre: [usize; 3], hw: usize) -> CubeStats {
    let m = (2 * hw + 1).min(n);
    let axis = |c: usize| -> Vec<usize> { (0..m).map(|d| (c + n * (hw / n + 1) + d - hw) % n).collect() };
    let (xs, ys, zs) = (axis(centre[0]), axis(centre[1]), axis(centre[2]));
    let count = (m * m * m) as f64;
    let mut sum = 0.0;
    let mut sum_abs = 0.0;
    for &k in &zs {
        for &j in &ys {
            let row = n * (j + n * k);
            for &i in &xs {
                let v = values[row + i];
                sum += v;
                sum_abs += v.abs();
            }
        }
    }
    let mean = sum / count;
    let mut dev = 0.0;
    for &k in &zs {
        for &j in &ys {
            let row = n * (j + n * k);
            for &i in &xs {
                dev += (values[row + i] - mean).abs();
            }
        }
    }
    CubeStats {
        oscillation: dev / count,
        mean_abs: sum_abs / count,
    }
}

/// `Ω(f, I(x, r))` on the cube of side `r` centred at grid point `centre`.
pub fn mean_oscillation(f: &ScalarField, centre: [usize; 3], side: f64) -> f64 {
    let hw = half_width(f.grid(), side);
    cube_stats(f.values(), f.grid().n(), centre, hw).oscillation
}

fn half_width(g: &GridSpec, side: f64) -> usize {
    ((0.5 * side / g.dx()) + 1e-9).floor() as usize
}

fn pow2_floor(v: usize) -> usize {
    if v == 0 {
        1
    } else {
        1 << (usize::BITS - 1 - v.leading_zeros())
    }
}

fn sup_over_centres(f: &ScalarField, side: f64, base_stride: usize, weight: f64) -> RadiusSup {
    let g = f.grid();
    let n = g.n();
    let hw = half_width(g, side);
    // neighbouring cubes overlap heavily at large sides; coarser centres
    // keep the cost flat across the ladder
    let stride = pow2_floor(base_stride.max(hw)).min(n / MIN_CENTERS_PER_AXIS).max(1);
    let per_axis = n.div_ceil(stride);
    let centres: Vec<[usize; 3]> = (0..per_axis * per_axis * per_axis)
        .map(|c| {
            let (a, b, d) = (c % per_axis, (c / per_axis) % per_axis, c / (per_axis * per_axis));
            [a * stride, b * stride, d * stride]
        })
        .collect();
    let stats: Vec<CubeStats> = centres
        .par_iter()
        .map(|&c| cube_stats(f.values(), n, c, hw))
        .collect();
    let mut best = 0usize;
    let mut mean_abs = 0.0f64;
    for (i, s) in stats.iter().enumerate() {
        if s.oscillation > stats[best].oscillation {
            best = i;
        }
        mean_abs = mean_abs.max(s.mean_abs);
    }
    let c = centres[best];
    RadiusSup {
        side,
        points_per_axis: (2 * hw + 1).min(n),
        centers_per_axis: per_axis,
        oscillation: stats[best].oscillation,
        mean_abs,
        weight,
        argmax: [g.coord(c[0]), g.coord(c[1]), g.coord(c[2])],
    }
}

/// Large cube sides `δ·2^k` up to the box length.
fn large_sides(grid: &GridSpec, delta: f64) -> Vec<f64> {
    (0..)
        .map(|k| delta * 2f64.powi(k))
        .take_while(|&r| r <= grid.box_length() * (1.0 + 1e-12))
        .collect()
}

/// Mean-oscillation norms over the configured ladder.
pub fn bmo_norm(f: &ScalarField, variant: BmoVariant, cfg: &OscillationConfig) -> Result<BmoReport> {
    let g = *f.grid();
    cfg.validate(&g)?;
    f.check_finite()?;
    let l1 = f.l1_norm();
    let report = |small: Vec<RadiusSup>, large: Vec<RadiusSup>, osc: f64, large_part: f64, norm: f64| BmoReport {
        variant,
        l1_norm: l1,
        oscillation_part: osc,
        large_scale_part: large_part,
        norm,
        small_scales: small,
        large_scales: large,
        lower_bound: true,
    };
    Ok(match variant {
        BmoVariant::Bmo => {
            let mut sides = cfg.radii.clone();
            sides.extend(large_sides(&g, cfg.bmo_delta).into_iter().filter(|&s| s > *cfg.radii.last().unwrap()));
            let small: Vec<RadiusSup> = sides
                .iter()
                .map(|&r| sup_over_centres(f, r, cfg.center_stride, 1.0))
                .collect();
            let osc = small.iter().map(|s| s.oscillation).fold(0.0, f64::max);
            report(small, Vec::new(), osc, 0.0, osc)
        }
        BmoVariant::LocalBmo => {
            let small: Vec<RadiusSup> = cfg
                .radii
                .iter()
                .filter(|&&r| r < cfg.bmo_delta)
                .map(|&r| sup_over_centres(f, r, cfg.center_stride, 1.0))
                .collect();
            let large: Vec<RadiusSup> = large_sides(&g, cfg.bmo_delta)
                .into_iter()
                .map(|r| sup_over_centres(f, r, cfg.center_stride, 1.0))
                .collect();
            let osc = small.iter().map(|s| s.oscillation).fold(0.0, f64::max);
            let lp = large.iter().map(|s| s.mean_abs).fold(0.0, f64::max);
            report(small, large, osc, lp, osc + lp)
        }
        BmoVariant::Weighted(w) => {
            let small: Vec<RadiusSup> = cfg
                .radii
                .iter()
                .map(|&r| sup_over_centres(f, r, cfg.center_stride, w.phi(r)))
                .collect();
            let osc = small
                .iter()
                .map(|s| s.oscillation / s.weight)
                .fold(0.0, f64::max);
            report(small, Vec::new(), osc, 0.0, l1 + osc)
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorPoint {
    pub time: f64,
    pub sup_vorticity: f64,
    /// `‖ψξ‖∞`.
    pub sup_norm: f64,
    /// Max over components of the `1/|log r|`-weighted norm of `ψξ_i`.
    pub weighted_norm: f64,
    pub oscillation_part: f64,
    /// `∫ ψ w log w`.
    pub llogl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionMonitor {
    /// `ε_dir / ‖ω(t)‖∞`.
    pub relative_threshold: f64,
    pub points: Vec<MonitorPoint>,
    pub running_sup_weighted: Vec<f64>,
    pub running_sup_llogl: Vec<f64>,
    pub lower_bound: bool,
}

pub const DEFAULT_DIRECTION_THRESHOLD: f64 = 1e-6;

/// Direction field `ξ = ω/|ω|` where `|ω| > ε`, zero elsewhere.
pub fn direction_field(omega: &VectorField, epsilon: f64) -> VectorField {
    let g = *omega.grid();
    let mut out = VectorField::zeros(g);
    for idx in 0..g.len() {
        let v = omega.at(idx);
        let m = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if m > epsilon {
            for c in 0..3 {
                out.component_mut(c)[idx] = v[c] / m;
            }
        }
    }
    out
}

/// Per snapshot: the weighted norm of the localized direction field and the
/// `L log L` functional, with running suprema.
pub fn direction_monitor(
    traj: &Trajectory,
    psi: &ScalarField,
    relative_threshold: f64,
    cfg: &OscillationConfig,
) -> Result<DirectionMonitor> {
    if !(relative_threshold > 0.0) {
        return Err(invalid("relative_threshold", "must be positive"));
    }
    traj.grid().check_same(psi.grid())?;
    cfg.validate(traj.grid())?;
    let mut points = Vec::with_capacity(traj.len());
    for (&t, w) in traj.times().iter().zip(traj.snapshots()) {
        let sup = w.max_norm();
        let ll = llogl(w, psi)?;
        if sup == 0.0 {
            points.push(MonitorPoint {
                time: t,
                sup_vorticity: 0.0,
                sup_norm: 0.0,
                weighted_norm: 0.0,
                oscillation_part: 0.0,
                llogl: ll,
            });
            continue;
        }
        let xi = direction_field(w, relative_threshold * sup);
        let mut weighted: f64 = 0.0;
        let mut osc: f64 = 0.0;
        let mut sup_norm: f64 = 0.0;
        for c in 0..3 {
            let comp: Vec<f64> = xi.component(c).iter().zip(psi.values()).map(|(a, b)| a * b).collect();
            let f = ScalarField::from_vec_unchecked(*psi.grid(), comp);
            sup_norm = sup_norm.max(f.max_abs());
            let rep = bmo_norm(&f, BmoVariant::Weighted(Weight::InverseLog), cfg)?;
            weighted = weighted.max(rep.norm);
            osc = osc.max(rep.oscillation_part);
        }
        points.push(MonitorPoint {
            time: t,
            sup_vorticity: sup,
            sup_norm,
            weighted_norm: weighted,
            oscillation_part: osc,
            llogl: ll,
        });
    }
    let running = |f: fn(&MonitorPoint) -> f64| {
        points
            .iter()
            .scan(f64::NEG_INFINITY, |m, p| {
                *m = m.max(f(p));
                Some(*m)
            })
            .collect::<Vec<f64>>()
    };
    Ok(DirectionMonitor {
        relative_threshold,
        running_sup_weighted: running(|p| p.weighted_norm),
        running_sup_llogl: running(|p| p.llogl),
        points,
        lower_bound: true,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleValue {
    pub family: String,
    pub value: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingStats {
    pub samples: Vec<SampleValue>,
    pub max: f64,
    pub median: f64,
    pub min: f64,
    /// `max / median`.
    pub spread: f64,
    /// Largest relative change of the statistic under `f → λf`; only for the
    /// logarithm-of-maximal-function suite.
    pub scaling_defect: Option<f64>,
}

fn stats(samples: Vec<SampleValue>, scaling_defect: Option<f64>) -> SamplingStats {
    let mut v: Vec<f64> = samples.iter().map(|s| s.value).collect();
    v.sort_by(f64::total_cmp);
    let median = if v.len() % 2 == 1 {
        v[v.len() / 2]
    } else {
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    };
    let max = *v.last().unwrap();
    SamplingStats {
        max,
        median,
        min: v[0],
        spread: if median > 0.0 { max / median } else { f64::INFINITY },
        samples,
        scaling_defect,
    }
}

pub const MIN_SAMPLES: usize = 20;
pub const MAXIMAL_FLOOR: f64 = 1e-300;

/// Positive test field of family `i % 4`: exponentiated random spectra,
/// Gaussian spikes, tube magnitudes, and products of the first two.
pub fn positive_sample(grid: &GridSpec, i: usize, seed: u64) -> Result<(String, ScalarField)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let l = grid.box_length();
    let k_max = (grid.n() / 3).clamp(1, 6);
    let spectra = |rng: &mut ChaCha8Rng| -> Result<ScalarField> {
        let s = Scenario::new(
            ScenarioKind::RandomSolenoidal {
                slope: -rng.gen_range(1.0..3.0),
                seed: rng.gen(),
                k_max,
            },
            rng.gen_range(0.5..2.0),
            *grid,
        );
        Ok(generate(&s)?.scalar(0).map(f64::exp))
    };
    let spikes = |rng: &mut ChaCha8Rng| -> ScalarField {
        let count = rng.gen_range(1..6);
        let bumps: Vec<([f64; 3], f64, f64)> = (0..count)
            .map(|_| {
                let c = [rng.gen::<f64>() * l, rng.gen::<f64>() * l, rng.gen::<f64>() * l];
                let width = grid.dx() * rng.gen_range(0.7..3.0);
                (c, width, rng.gen_range(0.5..5.0))
            })
            .collect();
        ScalarField::from_fn(*grid, |p| {
            bumps
                .iter()
                .map(|(c, s, a)| {
                    let d = grid.periodic_delta(*c, p);
                    a * (-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (2.0 * s * s)).exp()
                })
                .sum()
        })
    };
    Ok(match i % 4 {
        0 => ("spectrum".into(), spectra(&mut rng)?),
        1 => ("spikes".into(), spikes(&mut rng)),
        2 => {
            let axis = [Axis::X, Axis::Y, Axis::Z][rng.gen_range(0..3)];
            let a = grid.dx() * rng.gen_range(1.5..6.0);
            let c = [rng.gen::<f64>() * l, rng.gen::<f64>() * l, rng.gen::<f64>() * l];
            ("tube".into(), tube_field(grid, a, 1.0, axis, c).magnitude())
        }
        _ => {
            let a = spectra(&mut rng)?;
            let b = spikes(&mut rng);
            let v = a.values().iter().zip(b.values()).map(|(x, y)| x * y).collect();
            ("product".into(), ScalarField::from_vec_unchecked(*grid, v))
        }
    })
}

fn log_maximal_bmo(f: &ScalarField, cfg: &OscillationConfig) -> Result<(f64, bool)> {
    let m = maximal_function(f, MaximalVariant::HardyLittlewood)?;
    let flagged = m.values().iter().any(|&v| v < MAXIMAL_FLOOR);
    let lg = m.map(|v| v.max(MAXIMAL_FLOOR).ln());
    Ok((bmo_norm(&lg, BmoVariant::Bmo, cfg)?.norm, flagged))
}

/// `‖log Mf‖_BMO` over heterogeneous positive fields, with the scaling check
/// `f → λf` for `λ ∈ {10⁻⁶, 10⁶}` on every sample.
pub fn coifman_rochberg_check(grid: &GridSpec, sample_count: usize, seed: u64) -> Result<SamplingStats> {
    if sample_count < MIN_SAMPLES {
        return Err(invalid("sample_count", format!("must be >= {MIN_SAMPLES}")));
    }
    let cfg = OscillationConfig::for_grid(grid);
    let mut samples = Vec::with_capacity(sample_count);
    let mut defect: f64 = 0.0;
    for i in 0..sample_count {
        let (family, f) = positive_sample(grid, i, seed)?;
        let (value, flagged) = log_maximal_bmo(&f, &cfg)?;
        for lambda in [1e-6, 1e6] {
            let (scaled, _) = log_maximal_bmo(&f.map(|v| lambda * v), &cfg)?;
            defect = defect.max((scaled - value).abs() / value.max(f64::MIN_POSITIVE));
        }
        samples.push(SampleValue { family, value, flagged });
    }
    Ok(stats(samples, Some(defect)))
}

/// `‖M_h(E·B)‖₁ / (‖E‖₂ ‖B‖₂)` for divergence-free `E` and gradient `B`.
pub fn div_curl_ratio(e: &VectorField, b: &VectorField) -> Result<f64> {
    let den = e.l2_norm() * b.l2_norm();
    if den == 0.0 {
        return Ok(0.0);
    }
    let eb = e.dot(b)?;
    Ok(maximal_function(&eb, MaximalVariant::Global)?.l1_norm() / den)
}

/// Ratio statistics for random pairs; zero fields are redrawn.
pub fn div_curl_check(grid: &GridSpec, sample_count: usize, seed: u64) -> Result<SamplingStats> {
    if sample_count < MIN_SAMPLES {
        return Err(invalid("sample_count", format!("must be >= {MIN_SAMPLES}")));
    }
    let k_max = (grid.n() / 3).clamp(1, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(sample_count);
    while samples.len() < sample_count {
        let draw = |rng: &mut ChaCha8Rng| {
            Scenario::new(
                ScenarioKind::RandomSolenoidal {
                    slope: -rng.gen_range(0.0..4.0),
                    seed: rng.gen(),
                    k_max,
                },
                1.0,
                *grid,
            )
        };
        let e = project(&generate(&draw(&mut rng))?);
        let phi = generate(&draw(&mut rng))?.scalar(rng.gen_range(0..3));
        let b = gradient(&phi)?;
        if e.l2_norm() == 0.0 || b.l2_norm() == 0.0 {
            continue;
        }
        samples.push(SampleValue {
            family: "random".into(),
            value: div_curl_ratio(&e, &b)?,
            flagged: false,
        });
    }
    Ok(stats(samples, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> GridSpec {
        GridSpec::periodic(n, 0.05).unwrap()
    }

    fn unit_grid(n: usize) -> GridSpec {
        GridSpec::new(n, 1.0, 0.05).unwrap()
    }

    #[test]
    fn w_field_bounds() {
        let g = grid(8);
        let w = VectorField::from_fn(g, |p| [p[0].sin(), 0.0, 0.0]);
        let wf = WField::new(&w);
        assert!(wf.w().values().iter().all(|&v| v >= 1.0));
        let z = WField::new(&VectorField::zeros(g));
        assert!(z.w().values().iter().all(|&v| v == 1.0));
        assert!(z.log_w().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn distribution_of_constant() {
        let g = grid(8);
        let f = ScalarField::constant(g, 2.0);
        let lam = distribution_function(&f, &[1.0, 1.999, 2.0, 3.0]).unwrap();
        assert!((lam[0] - g.volume()).abs() < 1e-9);
        assert!((lam[1] - g.volume()).abs() < 1e-9);
        assert_eq!(lam[2], 0.0);
        assert_eq!(lam[3], 0.0);
        assert!(distribution_function(&f, &[2.0, 1.0]).is_err());
        assert!(distribution_function(&f, &[0.0]).is_err());
    }

    #[test]
    fn inverse_square_profile_slope() {
        // λ for |x|^{-2} truncated near the grid scale: volume of the ball
        // of radius β^{-1/2}, so slope −3/2.
        let g = grid(64);
        let c = [PI; 3];
        let f = ScalarField::from_fn(g, |p| {
            let d = g.periodic_delta(c, p);
            let r2 = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).max(g.dx() * g.dx());
            1.0 / r2
        });
        let betas: Vec<f64> = (0..10).map(|i| 1.0 * 1.4f64.powi(i)).collect();
        let lam = distribution_function(&f, &betas).unwrap();
        let x: Vec<f64> = betas.iter().map(|b| b.ln()).collect();
        let y: Vec<f64> = lam.iter().map(|l| l.ln()).collect();
        let slope = numeric::linear_slope(&x, &y).unwrap();
        assert!((slope + 1.5).abs() < 0.1, "{slope}");
    }

    #[test]
    fn llogl_constant_and_zero() {
        let g = grid(8);
        let psi = ScalarField::constant(g, 1.0);
        assert_eq!(llogl(&VectorField::zeros(g), &psi).unwrap(), 0.0);
        let c: f64 = 1.7;
        let w = VectorField::from_fn(g, |_| [0.0, c, 0.0]);
        let expect = g.volume() * (1.0 + c * c).sqrt() * 0.5 * (1.0 + c * c).ln();
        assert!((llogl(&w, &psi).unwrap() - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn maximal_of_constant() {
        let g = grid(16);
        let f = ScalarField::constant(g, 0.7);
        for v in [
            MaximalVariant::Global,
            MaximalVariant::Local,
            MaximalVariant::HardyLittlewood,
            MaximalVariant::Curly,
        ] {
            let m = maximal_function(&f, v).unwrap();
            for &x in m.values() {
                assert!((x - 0.7).abs() < 1e-12, "{v:?} {x}");
            }
        }
    }

    #[test]
    fn kernels_are_normalized() {
        let g = grid(16);
        for t in [4.0, 1.0, 0.5, 0.25, 0.05] {
            let k = smooth_kernel(&g, t);
            assert!((k.integral() - 1.0).abs() < 1e-10, "{t}");
        }
    }

    #[test]
    fn hl_dominates_ladder_averages() {
        let g = grid(16);
        let f = ScalarField::from_fn(g, |p| (p[0] + 0.3 * p[1]).sin() * p[2].cos());
        let m = maximal_function(&f, MaximalVariant::HardyLittlewood).unwrap();
        for hw in [1, 2, 5] {
            let avg = box_average(f.values(), 16, hw);
            for i in 0..g.len() {
                assert!(m.values()[i] >= avg[i] - 1e-14);
            }
        }
        for (a, b) in m.values().iter().zip(f.values()) {
            assert!(*a >= b.abs());
        }
    }

    #[test]
    fn point_mass_decay() {
        let g = grid(128);
        let mut v = vec![0.0; g.len()];
        v[0] = 1.0;
        let f = ScalarField::new(g, v).unwrap();
        let m = maximal_function(&f, MaximalVariant::HardyLittlewood).unwrap();
        let ladder: Vec<usize> = maximal_radii(&g, MaximalVariant::HardyLittlewood)
            .iter()
            .map(|r| (r / g.dx() + 1e-9).floor() as usize)
            .filter(|&hw| (5..g.n() / 2).contains(&hw))
            .collect();
        let x: Vec<f64> = ladder.iter().map(|&h| (h as f64 * g.dx()).ln()).collect();
        let y: Vec<f64> = ladder.iter().map(|&h| m.values()[h].ln()).collect();
        let slope = numeric::linear_slope(&x, &y).unwrap();
        assert!((slope + 3.0).abs() < 0.3, "{slope}");
    }

    #[test]
    fn oscillation_of_constant() {
        let g = grid(32);
        let f = ScalarField::constant(g, 3.0);
        let cfg = OscillationConfig::for_grid(&g);
        let bmo = bmo_norm(&f, BmoVariant::Bmo, &cfg).unwrap();
        assert_eq!(bmo.norm, 0.0);
        let w = bmo_norm(&f, BmoVariant::Weighted(Weight::InverseLog), &cfg).unwrap();
        assert_eq!(w.oscillation_part, 0.0);
        assert!((w.norm - f.l1_norm()).abs() < 1e-12 * w.norm);
        assert!(w.lower_bound);
    }

    #[test]
    fn oscillation_of_log_is_affine_invariant() {
        let g = grid(32);
        let c = [1.0, 2.0, 3.0];
        let f = ScalarField::from_fn(g, |p| {
            let d = g.periodic_delta(c, p);
            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt().max(g.dx()).ln()
        });
        let cfg = OscillationConfig::for_grid(&g);
        let base = bmo_norm(&f, BmoVariant::Bmo, &cfg).unwrap().norm;
        let shifted = bmo_norm(&f.map(|v| v + 5.0), BmoVariant::Bmo, &cfg).unwrap().norm;
        let doubled = bmo_norm(&f.map(|v| 2.0 * v), BmoVariant::Bmo, &cfg).unwrap().norm;
        assert!((shifted - base).abs() < 1e-12 * base);
        assert!((doubled - 2.0 * base).abs() < 1e-12 * base);
    }

    #[test]
    fn stride_must_give_enough_centres() {
        let g = grid(32);
        let mut cfg = OscillationConfig::for_grid(&g);
        cfg.center_stride = 8;
        assert!(bmo_norm(&ScalarField::zeros(g), BmoVariant::Bmo, &cfg).is_err());
    }

    #[test]
    fn weighted_orders_with_phi() {
        // for sides below 1/e the weighted oscillation exceeds the plain one
        let g = unit_grid(64);
        let f = ScalarField::from_fn(g, |p| (2.0 * PI * p[0]).sin() + (6.0 * PI * p[1]).cos());
        let cfg = OscillationConfig::for_grid(&g);
        let a = bmo_norm(&f, BmoVariant::Weighted(Weight::One), &cfg).unwrap();
        let b = bmo_norm(&f, BmoVariant::Weighted(Weight::InverseLog), &cfg).unwrap();
        for (x, y) in a.small_scales.iter().zip(&b.small_scales) {
            assert!(x.side < 1.0 / std::f64::consts::E);
            assert!(x.oscillation / x.weight <= y.oscillation / y.weight);
        }
    }

    #[test]
    fn step_grows_and_sin_log_log_stays_bounded() {
        let g = unit_grid(64);
        let step = ScalarField::from_fn(g, |p| if p[0] < 0.5 { 1.0 } else { 0.0 });
        let cfg = OscillationConfig::for_grid(&g);
        let rep = bmo_norm(&step, BmoVariant::Weighted(Weight::InverseLog), &cfg).unwrap();
        let by_side: Vec<f64> = rep.small_scales.iter().map(|s| s.oscillation / s.weight).collect();
        // sides are ascending, so the weighted oscillation decreases with side
        assert!(by_side.windows(2).all(|w| w[0] > w[1]), "{by_side:?}");
    }

    #[test]
    fn direction_of_planar_field() {
        let g = unit_grid(16);
        let w = VectorField::from_fn(g, |p| [0.0, 0.0, 2.0 + (2.0 * PI * p[0]).sin()]);
        let traj = Trajectory::from_snapshots(
            crate::solver::SolverConfig::new(g, 0.5, 0.5),
            vec![(0.0, w.clone()), (0.5, w.scale(0.5))],
        )
        .unwrap();
        let psi = ScalarField::constant(g, 1.0);
        let cfg = OscillationConfig::for_grid(&g);
        let mon = direction_monitor(&traj, &psi, DEFAULT_DIRECTION_THRESHOLD, &cfg).unwrap();
        for p in &mon.points {
            assert_eq!(p.oscillation_part, 0.0);
            assert!((p.weighted_norm - g.volume()).abs() < 1e-9);
        }
    }

    #[test]
    fn div_curl_zero_field() {
        let g = grid(16);
        let b = VectorField::from_fn(g, |p| [p[0].cos(), 0.0, 0.0]);
        assert_eq!(div_curl_ratio(&VectorField::zeros(g), &b).unwrap(), 0.0);
    }

    #[test]
    fn sampling_suites_reject_small_counts() {
        let g = grid(16);
        assert!(coifman_rochberg_check(&g, 5, 0).is_err());
        assert!(div_curl_check(&g, 5, 0).is_err());
    }
}
