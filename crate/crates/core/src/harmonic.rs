//! Harmonic measure in the unit disk by walk-on-spheres, and the
//! sparseness exponent `h(δ)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `h(δ) = (2/π) arcsin((1 − δ²)/(1 + δ²))` for `δ ∈ (0, 1)`.
pub fn h_delta(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    let d2 = delta * delta;
    Ok(2.0 / PI * ((1.0 - d2) / (1.0 + d2)).asin())
}

/// Smallest admissible exponent `(1 − h)/h`.
pub fn alpha_min(delta: f64) -> Result<f64> {
    let h = h_delta(delta)?;
    Ok((1.0 - h) / h)
}

/// `M(δ) = ‖ω‖∞ / d₀^α` with `α = α_min(δ)`.
pub fn threshold_m(delta: f64, sup_vorticity: f64, d0: f64) -> Result<f64> {
    if !(d0 > 0.0) {
        return Err(invalid("d0", "must be positive"));
    }
    Ok(sup_vorticity / d0.powf(alpha_min(delta)?))
}

pub const MIN_WALKERS: usize = 10_000;
pub const MAX_STEPS: usize = 100_000;
pub const DEFAULT_EPSILON: f64 = 1e-4;

/// Absorbing arc `{e^{iθ} : start ≤ θ ≤ start + width}` on the unit circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: f64,
    pub width: f64,
}

impl Arc {
    fn contains(&self, angle: f64) -> bool {
        (angle - self.start).rem_euclid(2.0 * PI) <= self.width
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskProblem {
    /// Closed subintervals of the real diameter.
    pub intervals: Vec<[f64; 2]>,
    /// Starting point `(x, y)` in the open disk.
    pub z0: [f64; 2],
    pub walkers: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    /// Optional target arc on the circle, counted separately.
    #[serde(default)]
    pub arc: Option<Arc>,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl DiskProblem {
    pub fn new(intervals: Vec<[f64; 2]>, z0: [f64; 2], walkers: usize, seed: u64) -> Self {
        Self {
            intervals,
            z0,
            walkers,
            epsilon: DEFAULT_EPSILON,
            seed,
            arc: None,
        }
    }

    /// Same problem reflected across the real axis.
    pub fn reflected(&self) -> Self {
        Self {
            z0: [self.z0[0], -self.z0[1]],
            arc: self.arc.map(|a| Arc {
                start: -(a.start + a.width),
                width: a.width,
            }),
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<Vec<[f64; 2]>> {
        if self.walkers < MIN_WALKERS {
            return Err(invalid("walkers", format!("must be >= {MIN_WALKERS}, got {}", self.walkers)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.1) {
            return Err(invalid("epsilon", format!("must lie in (0, 0.1), got {}", self.epsilon)));
        }
        let set = normalize_intervals(&self.intervals)?;
        let [x, y] = self.z0;
        if !(x.is_finite() && y.is_finite()) || 1.0 - x.hypot(y) <= self.epsilon {
            return Err(invalid("z0", "must lie strictly inside the disk"));
        }
        if distance_to_set(&set, x, y) <= self.epsilon {
            return Err(invalid("z0", "must lie off the absorbing set"));
        }
        if let Some(a) = self.arc {
            if !(a.width >= 0.0 && a.width <= 2.0 * PI) {
                return Err(invalid("arc", "width must lie in [0, 2π]"));
            }
        }
        Ok(set)
    }
}

/// Sorted union of the intervals; endpoints must lie in `[−1, 1]`.
pub fn normalize_intervals(intervals: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    let mut v: Vec<[f64; 2]> = Vec::with_capacity(intervals.len());
    for &[a, b] in intervals {
        if !(a.is_finite() && b.is_finite()) || a > b || a < -1.0 || b > 1.0 {
            return Err(invalid("intervals", format!("[{a}, {b}] is not a subinterval of [-1, 1]")));
        }
        v.push([a, b]);
    }
    v.sort_by(|p, q| p[0].total_cmp(&q[0]));
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(v.len());
    for iv in v {
        match out.last_mut() {
            Some(last) if iv[0] <= last[1] => last[1] = last[1].max(iv[1]),
            _ => out.push(iv),
        }
    }
    Ok(out)
}

fn distance_to_set(set: &[[f64; 2]], x: f64, y: f64) -> f64 {
    set.iter()
        .map(|&[a, b]| {
            let dx = (a - x).max(x - b).max(0.0);
            dx.hypot(y)
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicEstimate {
    pub walkers: usize,
    /// Walkers absorbed on the segment set.
    pub set_hits: usize,
    /// Walkers reaching the circle first (including capped walkers).
    pub circle_hits: usize,
    /// Circle hits inside the target arc.
    pub arc_hits: usize,
    /// Walkers stopped at the step cap and counted as circle hits.
    pub capped: usize,
    /// Fraction absorbed on the set, or on the arc when the set is empty and
    /// an arc is given.
    pub estimate: f64,
    pub stderr: f64,
    pub set_measure: f64,
    pub circle_measure: f64,
    pub notes: Vec<String>,
}

enum Exit {
    Set,
    Circle(f64),
    Capped(f64),
}

fn walk(set: &[[f64; 2]], z0: [f64; 2], eps: f64, rng: &mut ChaCha8Rng) -> Exit {
    let [mut x, mut y] = z0;
    for _ in 0..MAX_STEPS {
        let to_circle = 1.0 - x.hypot(y);
        if to_circle < eps {
            return Exit::Circle(y.atan2(x));
        }
        let to_set = distance_to_set(set, x, y);
        if to_set < eps {
            return Exit::Set;
        }
        let r = to_circle.min(to_set);
        let t = rng.gen::<f64>() * 2.0 * PI;
        x += r * t.cos();
        y += r * t.sin();
    }
    Exit::Capped(y.atan2(x))
}

/// Walk-on-spheres estimate of the harmonic measure of the segment set seen
/// from `z0`. Walker `i` draws from its own stream of the seeded generator, so
/// results do not depend on the thread count.
pub fn harmonic_measure_ws(p: &DiskProblem) -> Result<HarmonicEstimate> {
    let set = p.validate()?;
    let exits: Vec<Exit> = (0..p.walkers)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
            rng.set_stream(i as u64);
            walk(&set, p.z0, p.epsilon, &mut rng)
        })
        .collect();
    let (mut set_hits, mut circle_hits, mut arc_hits, mut capped) = (0, 0, 0, 0);
    for e in &exits {
        match *e {
            Exit::Set => set_hits += 1,
            Exit::Circle(a) | Exit::Capped(a) => {
                circle_hits += 1;
                if matches!(e, Exit::Capped(_)) {
                    capped += 1;
                }
                if p.arc.is_some_and(|arc| arc.contains(a)) {
                    arc_hits += 1;
                }
            }
        }
    }
    let n = p.walkers as f64;
    let target = if set.is_empty() && p.arc.is_some() {
        arc_hits
    } else {
        set_hits
    };
    let est = target as f64 / n;
    let mut notes = Vec::new();
    if capped > 0 {
        notes.push(format!(
            "{capped} walkers hit the {MAX_STEPS}-step cap and were counted as circle hits; the estimate is biased low"
        ));
    }
    Ok(HarmonicEstimate {
        walkers: p.walkers,
        set_hits,
        circle_hits,
        arc_hits,
        capped,
        estimate: est,
        stderr: (est * (1.0 - est) / n).sqrt(),
        set_measure: set_hits as f64 / n,
        circle_measure: circle_hits as f64 / n,
        notes,
    })
}

/// Placement of a segment set of total length fraction `δ` on `[−1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case")]
pub enum Layout {
    /// `[−δ, δ]`.
    Centered,
    /// `blocks` equal blocks centred in equal cells.
    Periodic { blocks: usize },
    /// `blocks` equal blocks separated by random gaps.
    Random { blocks: usize, seed: u64 },
}

impl Layout {
    pub fn name(&self) -> String {
        match self {
            Layout::Centered => "centered".into(),
            Layout::Periodic { blocks } => format!("periodic-{blocks}"),
            Layout::Random { blocks, seed } => format!("random-{blocks}-{seed}"),
        }
    }

    /// Intervals with total length `2δ`.
    pub fn intervals(&self, delta: f64) -> Result<Vec<[f64; 2]>> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(invalid("delta", format!("must lie in [0, 1], got {delta}")));
        }
        if delta == 0.0 {
            return Ok(Vec::new());
        }
        Ok(match *self {
            Layout::Centered => vec![[-delta, delta]],
            Layout::Periodic { blocks } => {
                if blocks == 0 {
                    return Err(invalid("blocks", "must be positive"));
                }
                let cell = 2.0 / blocks as f64;
                let half = 0.5 * cell * delta;
                (0..blocks)
                    .map(|b| {
                        let c = -1.0 + (b as f64 + 0.5) * cell;
                        [(c - half).max(-1.0), (c + half).min(1.0)]
                    })
                    .collect()
            }
            Layout::Random { blocks, seed } => {
                if blocks == 0 {
                    return Err(invalid("blocks", "must be positive"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let w: Vec<f64> = (0..=blocks).map(|_| -rng.gen::<f64>().ln()).collect();
                let total: f64 = w.iter().sum();
                let free = 2.0 * (1.0 - delta);
                let len = 2.0 * delta / blocks as f64;
                let mut x = -1.0;
                let mut out = Vec::with_capacity(blocks);
                for g in &w[..blocks] {
                    x += free * g / total;
                    out.push([x, (x + len).min(1.0)]);
                    x += len;
                }
                out
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub delta: f64,
    pub layout: String,
    pub z0: [f64; 2],
    pub estimate: f64,
    pub stderr: f64,
    /// `h(δ)` where defined.
    pub h: Option<f64>,
}

/// Harmonic measure of segment sets of length fraction `δ` for each layout
/// and starting point. All rows share the seed, so walkers reuse their
/// random streams across rows.
pub fn sparse_segment_study(
    deltas: &[f64],
    starts: &[[f64; 2]],
    layouts: &[Layout],
    walkers: usize,
    seed: u64,
) -> Result<Vec<StudyRow>> {
    let mut rows = Vec::new();
    for layout in layouts {
        for &z0 in starts {
            for &delta in deltas {
                let p = DiskProblem::new(layout.intervals(delta)?, z0, walkers, seed);
                let est = harmonic_measure_ws(&p)?;
                rows.push(StudyRow {
                    delta,
                    layout: layout.name(),
                    z0,
                    estimate: est.estimate,
                    stderr: est.stderr,
                    h: h_delta(delta).ok(),
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_values() {
        assert!((h_delta(1.0 / 3f64.sqrt()).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(h_delta(1.0 - 1e-9).unwrap() < 1e-8);
        assert!(h_delta(1e-9).unwrap() > 1.0 - 1e-8);
        for d in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(h_delta(d).is_err());
        }
        assert!((alpha_min(1.0 / 3f64.sqrt()).unwrap() - 2.0).abs() < 1e-11);
        assert!((threshold_m(1.0 / 3f64.sqrt(), 8.0, 2.0).unwrap() - 2.0).abs() < 1e-11);
    }

    #[test]
    fn empty_set_has_zero_measure() {
        let e = harmonic_measure_ws(&DiskProblem::new(vec![], [0.2, 0.3], 10_000, 1)).unwrap();
        assert_eq!(e.set_hits, 0);
        assert_eq!(e.circle_hits, 10_000);
        assert_eq!(e.estimate, 0.0);
    }

    #[test]
    fn total_mass_and_determinism() {
        let p = DiskProblem::new(vec![[-0.5, 0.2]], [0.1, 0.4], 10_000, 9);
        let a = harmonic_measure_ws(&p).unwrap();
        let b = harmonic_measure_ws(&p).unwrap();
        assert_eq!(a.set_hits + a.circle_hits, a.walkers);
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
    }

    #[test]
    fn rejects_bad_problems() {
        assert!(harmonic_measure_ws(&DiskProblem::new(vec![], [0.0, 0.0], 100, 0)).is_err());
        assert!(harmonic_measure_ws(&DiskProblem::new(vec![], [1.0, 0.0], 10_000, 0)).is_err());
        assert!(harmonic_measure_ws(&DiskProblem::new(vec![[-0.5, 0.5]], [0.1, 0.0], 10_000, 0)).is_err());
        assert!(normalize_intervals(&[[0.5, 0.2]]).is_err());
        assert!(normalize_intervals(&[[-1.5, 0.2]]).is_err());
    }

    #[test]
    fn union_of_overlaps() {
        let v = normalize_intervals(&[[0.1, 0.5], [-0.2, 0.2], [0.7, 0.8]]).unwrap();
        assert_eq!(v, vec![[-0.2, 0.5], [0.7, 0.8]]);
    }

    #[test]
    fn layouts_have_requested_length() {
        for layout in [
            Layout::Centered,
            Layout::Periodic { blocks: 5 },
            Layout::Random { blocks: 4, seed: 3 },
        ] {
            for delta in [0.1, 0.5, 0.9, 1.0] {
                let iv = normalize_intervals(&layout.intervals(delta).unwrap()).unwrap();
                let len: f64 = iv.iter().map(|[a, b]| b - a).sum();
                assert!((len - 2.0 * delta).abs() < 1e-12, "{layout:?} {delta} {len}");
            }
        }
    }

    #[test]
    fn reflection_flips_arc() {
        let mut p = DiskProblem::new(vec![], [0.0, 0.3], 10_000, 0);
        p.arc = Some(Arc { start: 0.2, width: 0.5 });
        let r = p.reflected();
        assert_eq!(r.z0, [0.0, -0.3]);
        let a = r.arc.unwrap();
        assert!(a.contains(-0.3) && !a.contains(0.3));
    }
}
