//! Geometry of vorticity super-level sets: linear sparseness along segments,
//! the time-windowed sparseness condition on a trajectory, and the scaling
//! of intense-vorticity regions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{GridSpec, ScalarField, VectorField};
use crate::harmonic::h_delta;
use crate::oscillation::distribution_function;
use crate::solver::Trajectory;

/// Grid points where `|ω| > M`, together with the sampled `|ω|` used for
/// sub-grid interpolation.
#[derive(Clone, Debug)]
pub struct SuperlevelMask {
    grid: GridSpec,
    threshold: f64,
    mask: Vec<bool>,
    magnitude: ScalarField,
    source_time: f64,
}

impl SuperlevelMask {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn magnitude(&self) -> &ScalarField {
        &self.magnitude
    }

    pub fn source_time(&self) -> f64 {
        self.source_time
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// `Δx³ · #{x : |ω(x)| > M}`.
    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    /// Periodic trilinear interpolation of `|ω|`.
    pub fn interpolate(&self, p: [f64; 3]) -> f64 {
        trilinear(&self.magnitude, p)
    }

    /// Sub-grid indicator of the set at `p`.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        self.interpolate(p) > self.threshold
    }
}

pub(crate) fn trilinear(f: &ScalarField, p: [f64; 3]) -> f64 {
    let g = f.grid();
    let n = g.n();
    let dx = g.dx();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for c in 0..3 {
        let s = (p[c] / dx).rem_euclid(n as f64);
        let i = s.floor();
        base[c] = (i as usize) % n;
        frac[c] = s - i;
    }
    let v = f.values();
    let mut acc = 0.0;
    for corner in 0..8 {
        let o = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
        let mut w = 1.0;
        for c in 0..3 {
            w *= if o[c] == 1 { frac[c] } else { 1.0 - frac[c] };
        }
        if w == 0.0 {
            continue;
        }
        let idx = g.index(
            (base[0] + o[0]) % n,
            (base[1] + o[1]) % n,
            (base[2] + o[2]) % n,
        );
        acc += w * v[idx];
    }
    acc
}

/// `Ω(M) = {x : |ω(x)| > M}` on grid points.
pub fn superlevel(omega: &VectorField, threshold: f64) -> Result<SuperlevelMask> {
    superlevel_at(omega, threshold, 0.0)
}

pub fn superlevel_at(omega: &VectorField, threshold: f64, time: f64) -> Result<SuperlevelMask> {
    if !(threshold >= 0.0) {
        return Err(invalid("threshold", format!("must be >= 0, got {threshold}")));
    }
    let magnitude = omega.magnitude();
    Ok(superlevel_of_magnitude(magnitude, threshold, time))
}

pub(crate) fn superlevel_of_magnitude(magnitude: ScalarField, threshold: f64, time: f64) -> SuperlevelMask {
    let mask = magnitude.values().iter().map(|&v| v > threshold).collect();
    SuperlevelMask {
        grid: *magnitude.grid(),
        threshold,
        mask,
        magnitude,
        source_time: time,
    }
}

/// Quadrature points used for a segment of half-length `r`.
pub fn quadrature_points(grid: &GridSpec, r: f64) -> usize {
    (4 * (r / grid.dx()).ceil() as usize + 1).max(33)
}

/// Fraction of the segment `(x₀ − r d, x₀ + r d)` inside the set, by
/// composite trapezoid quadrature of the interpolated indicator.
pub fn segment_occupancy(mask: &SuperlevelMask, x0: [f64; 3], d: [f64; 3], r: f64) -> Result<f64> {
    let l = mask.grid.box_length();
    if !(r > 0.0 && r <= 0.5 * l) {
        return Err(invalid("r", format!("must lie in (0, L/2] = (0, {}], got {r}", 0.5 * l)));
    }
    let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(invalid("d", format!("must be a unit vector, |d| = {norm}")));
    }
    Ok(occupancy_unchecked(mask, x0, d, r))
}

fn occupancy_unchecked(mask: &SuperlevelMask, x0: [f64; 3], d: [f64; 3], r: f64) -> f64 {
    if mask.is_empty() {
        return 0.0;
    }
    let m = quadrature_points(&mask.grid, r);
    let h = 2.0 * r / (m - 1) as f64;
    let mut inside = 0.0;
    for q in 0..m {
        let s = -r + q as f64 * h;
        let p = [x0[0] + s * d[0], x0[1] + s * d[1], x0[2] + s * d[2]];
        if mask.contains(p) {
            inside += if q == 0 || q == m - 1 { 0.5 } else { 1.0 };
        }
    }
    inside * h / (2.0 * r)
}

/// `count` quasi-uniform unit vectors (Fibonacci lattice). Antipodal
/// directions span the same segment, so they are not listed separately.
pub fn fibonacci_directions(count: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / count as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            let v = [rho * phi.cos(), rho * phi.sin(), z];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            [v[0] / n, v[1] / n, v[2] / n]
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub point: [f64; 3],
    pub direction: [f64; 3],
    pub occupancy: f64,
    pub scale: f64,
    pub delta: f64,
    pub sparse: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsenessReport {
    pub threshold: f64,
    pub source_time: f64,
    pub scale: f64,
    pub delta: f64,
    pub directions: usize,
    pub probes: Vec<ProbeResult>,
    pub pass_fraction: f64,
    pub all_pass: bool,
}

pub const MIN_DIRECTIONS: usize = 32;
pub const DEFAULT_DIRECTIONS: usize = 192;
pub const MAX_DEFAULT_PROBES: usize = 4096;

/// Grid points of the set, at most `limit` of them. Points farther than `r`
/// (plus one cell) from the set have zero occupancy in every direction, so
/// only points of the set are probed by default.
///
/// Larger sets are sampled uniformly with a fixed seed. A fixed stride would
/// alias with sets that repeat along an axis (a tube has the same number of
/// points in every slice) and probe one spot per slice.
pub fn default_probes(mask: &SuperlevelMask, limit: usize) -> Vec<[f64; 3]> {
    let idx: Vec<usize> = mask
        .mask
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect();
    let limit = limit.max(1);
    if idx.len() <= limit {
        return idx.iter().map(|&i| mask.grid.point(i)).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let mut pick = rand::seq::index::sample(&mut rng, idx.len(), limit).into_vec();
    pick.sort_unstable();
    pick.into_iter().map(|k| mask.grid.point(idx[k])).collect()
}

const PROBE_SEED: u64 = 0x5eed;

/// Minimum occupancy over `n_dir` directions for each probe, compared with
/// `δ`. Output order follows `probes`; ties pick the first direction.
pub fn sparseness_scan(
    mask: &SuperlevelMask,
    probes: &[[f64; 3]],
    r: f64,
    delta: f64,
    n_dir: usize,
) -> Result<SparsenessReport> {
    if n_dir < MIN_DIRECTIONS {
        return Err(invalid("n_dir", format!("must be >= {MIN_DIRECTIONS}, got {n_dir}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    let l = mask.grid.box_length();
    if !(r > 0.0 && r <= 0.5 * l) {
        return Err(invalid("r", format!("must lie in (0, L/2], got {r}")));
    }
    let dirs = fibonacci_directions(n_dir);
    let results: Vec<ProbeResult> = probes
        .par_iter()
        .map(|&p| {
            let mut best = (f64::INFINITY, dirs[0]);
            for &d in &dirs {
                let occ = occupancy_unchecked(mask, p, d, r);
                if occ < best.0 {
                    best = (occ, d);
                    if occ == 0.0 {
                        break;
                    }
                }
            }
            ProbeResult {
                point: p,
                direction: best.1,
                occupancy: best.0,
                scale: r,
                delta,
                sparse: best.0 <= delta,
            }
        })
        .collect();
    let passed = results.iter().filter(|p| p.sparse).count();
    let pass_fraction = if results.is_empty() {
        1.0
    } else {
        passed as f64 / results.len() as f64
    };
    Ok(SparsenessReport {
        threshold: mask.threshold,
        source_time: mask.source_time,
        scale: r,
        delta,
        directions: n_dir,
        all_pass: passed == results.len(),
        probes: results,
        pass_fraction,
    })
}

/// Parameters of the windowed sparseness condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityConditionConfig {
    /// Scaling constant `d₀ > 0` of the local time step.
    #[serde(default = "default_d0")]
    pub d0: f64,
    /// Intense-vorticity factor `c₁ > 1`.
    #[serde(default = "default_c1")]
    pub c1: f64,
    /// Sparseness target in `(0, 1)`.
    pub delta: f64,
    /// Exponent `α`; defaults to `(1 − h)/h`.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_dirs")]
    pub n_dir: usize,
    #[serde(default = "default_probe_limit")]
    pub max_probes: usize,
    /// Number of dyadic scales tried below the largest admissible one.
    #[serde(default = "default_scales")]
    pub scales: usize,
}

fn default_d0() -> f64 {
    1.0
}
fn default_c1() -> f64 {
    2.0
}
fn default_dirs() -> usize {
    DEFAULT_DIRECTIONS
}
fn default_probe_limit() -> usize {
    MAX_DEFAULT_PROBES
}
fn default_scales() -> usize {
    3
}

impl RegularityConditionConfig {
    pub fn new(delta: f64) -> Self {
        Self {
            d0: default_d0(),
            c1: default_c1(),
            delta,
            alpha: None,
            n_dir: DEFAULT_DIRECTIONS,
            max_probes: MAX_DEFAULT_PROBES,
            scales: default_scales(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d0 > 0.0) {
            return Err(invalid("d0", "must be positive"));
        }
        if !(self.c1 > 1.0) {
            return Err(invalid("c1", "must exceed 1"));
        }
        let h = h_delta(self.delta)?;
        if let Some(a) = self.alpha {
            if a < (1.0 - h) / h {
                return Err(invalid("alpha", format!("must be >= (1-h)/h = {}", (1.0 - h) / h)));
            }
        }
        if self.n_dir < MIN_DIRECTIONS {
            return Err(invalid("n_dir", format!("must be >= {MIN_DIRECTIONS}")));
        }
        Ok(())
    }

    pub fn h(&self) -> Result<f64> {
        h_delta(self.delta)
    }

    pub fn alpha(&self) -> Result<f64> {
        let h = self.h()?;
        Ok(self.alpha.unwrap_or((1.0 - h) / h))
    }

    /// `M(δ) = ‖ω(t)‖∞ / d₀^α`.
    pub fn threshold(&self, sup_vorticity: f64) -> Result<f64> {
        Ok(sup_vorticity / self.d0.powf(self.alpha()?))
    }

    /// `(d₀² ‖ω(t)‖∞)⁻¹`.
    pub fn time_step(&self, sup_vorticity: f64) -> f64 {
        1.0 / (self.d0 * self.d0 * sup_vorticity)
    }

    /// `1 / (2 d₀² ‖ω(t)‖∞^{1/2})`.
    pub fn max_scale(&self, sup_vorticity: f64) -> f64 {
        1.0 / (2.0 * self.d0 * self.d0 * sup_vorticity.sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// No snapshot falls in the window: no verdict.
    WindowUnsampled,
    /// The field vanishes; the condition holds trivially.
    Vacuous,
    /// The local time step already reaches the run horizon.
    HorizonReached,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowCheck {
    pub snapshot_time: f64,
    pub pass_fraction: f64,
    pub all_pass: bool,
    pub probes: usize,
    pub empty_set: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityEntry {
    pub time: f64,
    pub sup_vorticity: f64,
    pub time_step: Option<f64>,
    pub window: Option<[f64; 2]>,
    pub threshold: Option<f64>,
    pub max_scale: Option<f64>,
    /// `t + (d₀²‖ω(t)‖∞)⁻¹ ≥ T*`.
    pub horizon_reached: bool,
    pub checks: Vec<WindowCheck>,
    pub best_snapshot_time: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub config: RegularityConditionConfig,
    pub h: f64,
    pub alpha: f64,
    pub horizon: f64,
    pub entries: Vec<RegularityEntry>,
    /// Some sampled `t` reaches the horizon with its local time step.
    pub horizon_condition: bool,
    /// Every sampled `t` with a sampled window passed; `None` when no window
    /// was sampled.
    pub sparseness_condition: Option<bool>,
    pub unsampled_windows: usize,
}

/// Evaluates, for each snapshot time `t`, the local time step, the window
/// `[t + τ/4, t + τ]`, and the sparseness of `Ω_s(M(δ))` at some scale
/// `r ≤ 1/(2 d₀² ‖ω(t)‖∞^{1/2})` for snapshots `s` in that window. All
/// snapshots in the window are scanned and the best one is reported.
pub fn regularity_condition_report(
    traj: &Trajectory,
    cfg: &RegularityConditionConfig,
) -> Result<RegularityReport> {
    cfg.validate()?;
    let h = cfg.h()?;
    let alpha = cfg.alpha()?;
    let horizon = traj.times().last().copied().unwrap_or(0.0);
    let grid = *traj.grid();
    let mags: Vec<ScalarField> = traj.snapshots().iter().map(|w| w.magnitude()).collect();
    let sups: Vec<f64> = mags.iter().map(|m| m.max_abs()).collect();
    let tol = 1e-12 * horizon.max(1.0);

    let mut entries = Vec::with_capacity(traj.len());
    for (ti, &t) in traj.times().iter().enumerate() {
        let sup = sups[ti];
        if sup == 0.0 {
            entries.push(RegularityEntry {
                time: t,
                sup_vorticity: 0.0,
                time_step: None,
                window: None,
                threshold: None,
                max_scale: None,
                horizon_reached: true,
                checks: Vec::new(),
                best_snapshot_time: None,
                verdict: Verdict::Vacuous,
            });
            continue;
        }
        let tau = cfg.time_step(sup);
        let window = [t + 0.25 * tau, t + tau];
        let threshold = cfg.threshold(sup)?;
        let r_max = cfg.max_scale(sup).min(0.5 * grid.box_length());
        let horizon_reached = t + tau >= horizon;
        let mut entry = RegularityEntry {
            time: t,
            sup_vorticity: sup,
            time_step: Some(tau),
            window: Some(window),
            threshold: Some(threshold),
            max_scale: Some(r_max),
            horizon_reached,
            checks: Vec::new(),
            best_snapshot_time: None,
            verdict: Verdict::HorizonReached,
        };
        if horizon_reached {
            entries.push(entry);
            continue;
        }
        let in_window: Vec<usize> = traj
            .times()
            .iter()
            .enumerate()
            .filter(|(_, &s)| s >= window[0] - tol && s <= window[1] + tol)
            .map(|(i, _)| i)
            .collect();
        if in_window.is_empty() {
            entry.verdict = Verdict::WindowUnsampled;
            entries.push(entry);
            continue;
        }
        let scales: Vec<f64> = (0..cfg.scales.max(1))
            .map(|j| r_max / 2f64.powi(j as i32))
            .filter(|&r| r >= grid.dx() || r == r_max)
            .collect();
        let mut best: Option<(f64, usize)> = None;
        for si in in_window {
            let mask = superlevel_of_magnitude(mags[si].clone(), threshold, traj.times()[si]);
            let probes = default_probes(&mask, cfg.max_probes);
            let passed = if probes.is_empty() {
                0
            } else {
                // a probe passes if some admissible scale is sparse
                let mut ok = vec![false; probes.len()];
                for &r in &scales {
                    let rep = sparseness_scan(&mask, &probes, r, cfg.delta, cfg.n_dir)?;
                    for (o, p) in ok.iter_mut().zip(&rep.probes) {
                        *o |= p.sparse;
                    }
                }
                ok.iter().filter(|&&b| b).count()
            };
            let frac = if probes.is_empty() {
                1.0
            } else {
                passed as f64 / probes.len() as f64
            };
            entry.checks.push(WindowCheck {
                snapshot_time: traj.times()[si],
                pass_fraction: frac,
                all_pass: passed == probes.len(),
                probes: probes.len(),
                empty_set: mask.is_empty(),
            });
            if best.is_none_or(|(f, _)| frac > f) {
                best = Some((frac, entry.checks.len() - 1));
            }
        }
        let (_, bi) = best.expect("window has at least one snapshot");
        entry.best_snapshot_time = Some(entry.checks[bi].snapshot_time);
        entry.verdict = if entry.checks[bi].all_pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        entries.push(entry);
    }

    let horizon_condition = entries
        .iter()
        .any(|e| e.horizon_reached && e.verdict != Verdict::Vacuous)
        || entries.iter().all(|e| e.verdict == Verdict::Vacuous);
    let judged: Vec<&RegularityEntry> = entries
        .iter()
        .filter(|e| matches!(e.verdict, Verdict::Pass | Verdict::Fail))
        .collect();
    let sparseness_condition = if judged.is_empty() {
        None
    } else {
        Some(judged.iter().all(|e| e.verdict == Verdict::Pass))
    };
    let unsampled_windows = entries
        .iter()
        .filter(|e| e.verdict == Verdict::WindowUnsampled)
        .count();
    Ok(RegularityReport {
        config: cfg.clone(),
        h,
        alpha,
        horizon,
        entries,
        horizon_condition,
        sparseness_condition,
        unsampled_windows,
    })
}

/// Scaling record of the intense-vorticity region `Ω(‖ω‖∞ / c₁)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalityRecord {
    pub c1: f64,
    pub l1_norm: f64,
    pub sup_norm: f64,
    pub threshold: Option<f64>,
    pub volume: Option<f64>,
    /// `Vol · ‖ω‖∞ / (c₁ ‖ω‖₁)`; at most one on any grid.
    pub chebyshev_ratio: Option<f64>,
    /// Filament length used for the transversal scale.
    pub filament_length: f64,
    /// `(Vol / R₀)^{1/2}`.
    pub transversal_scale: Option<f64>,
    /// `transversal_scale · ‖ω‖∞^{1/2}`.
    pub normalized_transversal_scale: Option<f64>,
    pub beta: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Least-squares slope of `log λ` against `log β`.
    pub lambda_slope: Option<f64>,
    /// Slopes between consecutive samples.
    pub local_slopes: Vec<f64>,
}

pub const CRITICALITY_SAMPLES: usize = 24;

/// Volume and scaling of the intense-vorticity region. The filament length
/// defaults to the box length.
pub fn criticality_scales(
    omega: &VectorField,
    c1: f64,
    filament_length: Option<f64>,
) -> Result<CriticalityRecord> {
    if !(c1 > 1.0) {
        return Err(invalid("c1", format!("must exceed 1, got {c1}")));
    }
    let g = *omega.grid();
    let r0 = filament_length.unwrap_or(g.box_length());
    let mag = omega.magnitude();
    let sup = mag.max_abs();
    let l1 = compensated_sum(mag.values()) * g.cell_volume();
    if sup == 0.0 {
        return Ok(CriticalityRecord {
            c1,
            l1_norm: 0.0,
            sup_norm: 0.0,
            threshold: None,
            volume: None,
            chebyshev_ratio: None,
            filament_length: r0,
            transversal_scale: None,
            normalized_transversal_scale: None,
            beta: Vec::new(),
            lambda: Vec::new(),
            lambda_slope: None,
            local_slopes: Vec::new(),
        });
    }
    let threshold = sup / c1;
    let count = mag.values().iter().filter(|&&v| v > threshold).count();
    let volume = count as f64 * g.cell_volume();
    let ratio = volume * threshold / l1;
    let transversal = (volume / r0).sqrt();

    let beta: Vec<f64> = (0..CRITICALITY_SAMPLES)
        .map(|i| sup * 10f64.powf(-2.0 + 2.0 * i as f64 / CRITICALITY_SAMPLES as f64))
        .collect();
    let lambda = distribution_function(&mag, &beta)?;
    let (lx, ly): (Vec<f64>, Vec<f64>) = beta
        .iter()
        .zip(&lambda)
        .filter(|(_, &l)| l > 0.0)
        .map(|(b, l)| (b.ln(), l.ln()))
        .unzip();
    let lambda_slope = crate::numeric::linear_slope(&lx, &ly);
    let local_slopes = lx
        .windows(2)
        .zip(ly.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    Ok(CriticalityRecord {
        c1,
        l1_norm: l1,
        sup_norm: sup,
        threshold: Some(threshold),
        volume: Some(volume),
        chebyshev_ratio: Some(ratio),
        filament_length: r0,
        transversal_scale: Some(transversal),
        normalized_transversal_scale: Some(transversal * sup.sqrt()),
        beta,
        lambda,
        lambda_slope,
        local_slopes,
    })
}

/// Kahan–Neumaier sum.
fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
