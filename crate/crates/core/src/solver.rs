//! Vorticity-form Navier–Stokes time integration.
//!
//! The state is `ω̂`. The nonlinear term `(ω·∇)u − (u·∇)ω` is evaluated in the
//! rotational form `curl(u × ω)`, which is identical for solenoidal fields and
//! costs nine transforms per evaluation. Viscosity is integrated exactly with
//! the factor `exp(-ν|k|² t)` inside a classical four-stage Runge–Kutta
//! scheme.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::ops::{biot_savart_hat, curl_hat, dealias_in_place, full_k2, gradient_hat};
use crate::grid::{GridSpec, SpectralVector, VectorField};
use crate::ScalarField;

/// Time-integration parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid: GridSpec,
    /// Courant factor in `(0, 1]`.
    #[serde(default = "default_cfl")]
    pub dt_cfl: f64,
    pub t_end: f64,
    pub snapshot_every: f64,
    #[serde(default = "default_true")]
    pub dealias: bool,
    /// Fixed step; when absent the step follows the CFL limit.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Halt when `‖ω‖∞` exceeds this multiple of its initial value.
    #[serde(default = "default_blowup")]
    pub blowup_factor: f64,
}

fn default_cfl() -> f64 {
    0.4
}
fn default_true() -> bool {
    true
}
fn default_blowup() -> f64 {
    1e6
}

impl SolverConfig {
    pub fn new(grid: GridSpec, t_end: f64, snapshot_every: f64) -> Self {
        Self {
            grid,
            dt_cfl: default_cfl(),
            t_end,
            snapshot_every,
            dealias: true,
            dt: None,
            blowup_factor: default_blowup(),
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_cfl > 0.0 && self.dt_cfl <= 1.0) {
            return Err(invalid("dt_cfl", format!("must lie in (0, 1], got {}", self.dt_cfl)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if !(self.snapshot_every > 0.0) {
            return Err(invalid(
                "snapshot_every",
                format!("must be positive, got {}", self.snapshot_every),
            ));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid("dt", format!("must be positive, got {dt}")));
            }
        }
        if !(self.blowup_factor > 1.0) {
            return Err(invalid("blowup_factor", "must exceed 1"));
        }
        Ok(())
    }
}

/// How a run ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    /// The blow-up guard fired; the trajectory stops at `time`.
    UnderResolved { time: f64, max_vorticity: f64 },
}

/// Per-step record of global quantities, taken at the start of each step
/// and once at the final time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub time: f64,
    pub energy: f64,
    pub enstrophy: f64,
}

/// Stored vorticity snapshots of one run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub config: SolverConfig,
    times: Vec<f64>,
    snapshots: Vec<VectorField>,
    pub history: Vec<StepRecord>,
    pub status: RunStatus,
    pub steps: usize,
}

impl Trajectory {
    /// Builds a trajectory from externally produced snapshots, e.g. frozen or
    /// synthetic fields used by diagnostics.
    pub fn from_snapshots(
        config: SolverConfig,
        snapshots: Vec<(f64, VectorField)>,
    ) -> Result<Self> {
        let mut times = Vec::with_capacity(snapshots.len());
        let mut fields = Vec::with_capacity(snapshots.len());
        for (t, w) in snapshots {
            if let Some(&last) = times.last() {
                if t <= last {
                    return Err(invalid("snapshots", "times must be strictly increasing"));
                }
            }
            config.grid.check_same(w.grid())?;
            times.push(t);
            fields.push(w);
        }
        Ok(Self {
            config,
            times,
            snapshots: fields,
            history: Vec::new(),
            status: RunStatus::Complete,
            steps: 0,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshots(&self) -> &[VectorField] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn grid(&self) -> &GridSpec {
        &self.config.grid
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &VectorField)> {
        self.times.iter().copied().zip(self.snapshots.iter())
    }

    pub fn last(&self) -> Option<(f64, &VectorField)> {
        self.iter().last()
    }

    /// Snapshot whose time matches `t` to within `1e-9` relative.
    pub fn at_time(&self, t: f64) -> Option<&VectorField> {
        let tol = 1e-9 * t.abs().max(1.0);
        self.iter().find(|(s, _)| (s - t).abs() <= tol).map(|(_, w)| w)
    }
}

/// `½‖u‖₂²` from vorticity coefficients.
pub fn energy_of(hat: &SpectralVector) -> f64 {
    let u = biot_savart_hat(hat);
    let g = hat.grid();
    0.5 * u.parseval_sum() * g.cell_volume()
}

/// `½‖ω‖₂²`.
pub fn enstrophy_of(hat: &SpectralVector) -> f64 {
    0.5 * hat.parseval_sum() * hat.grid().cell_volume()
}

/// Pseudospectral right-hand side without viscosity.
pub struct Nonlinear {
    dealias: bool,
}

struct Evaluated {
    rhs: SpectralVector,
    max_velocity: f64,
    max_vorticity: f64,
}

impl Nonlinear {
    pub fn new(dealias: bool) -> Self {
        Self { dealias }
    }

    fn eval(&self, w_hat: &SpectralVector) -> Result<Evaluated> {
        let u_hat = biot_savart_hat(w_hat);
        let u = u_hat.to_physical();
        let w = w_hat.to_physical();
        let grid = *w.grid();
        let mut prod = VectorField::zeros(grid);
        let mut max_u = 0.0f64;
        let mut max_w = 0.0f64;
        for idx in 0..grid.len() {
            let a = u.at(idx);
            let b = w.at(idx);
            let c = [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ];
            for (comp, v) in c.into_iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteStep { time: f64::NAN });
                }
                prod.component_mut(comp)[idx] = v;
            }
            max_u = max_u.max((a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt());
            max_w = max_w.max((b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt());
        }
        let mut p_hat = SpectralVector::forward(&prod);
        if self.dealias {
            dealias_in_place(&mut p_hat);
        }
        Ok(Evaluated {
            rhs: curl_hat(&p_hat),
            max_velocity: max_u,
            max_vorticity: max_w,
        })
    }
}

/// `(ω·∇)u − (u·∇)ω` with `u` from Biot–Savart, dealiased. Viscosity is not
/// included; the integrator treats it exactly.
pub fn vorticity_rhs(omega: &VectorField) -> Result<VectorField> {
    let hat = SpectralVector::try_forward(omega)?;
    Ok(Nonlinear::new(true).eval(&hat)?.rhs.to_physical())
}

/// Velocity gradient tensor `∂_j u_i`, indexed `[i][j]`.
fn velocity_gradient(omega: &VectorField) -> Result<[VectorField; 3]> {
    let hat = SpectralVector::try_forward(omega)?;
    let u_hat = biot_savart_hat(&hat);
    Ok([0, 1, 2].map(|i| gradient_hat(&u_hat.scalar(i)).to_physical()))
}

/// Vortex-stretching vector `(ω·∇)u` computed from the velocity gradient.
pub fn vortex_stretching(omega: &VectorField) -> Result<VectorField> {
    let grad = velocity_gradient(omega)?;
    let grid = *omega.grid();
    let mut out = VectorField::zeros(grid);
    for idx in 0..grid.len() {
        let w = omega.at(idx);
        for (i, gi) in grad.iter().enumerate() {
            let d = gi.at(idx);
            out.component_mut(i)[idx] = w[0] * d[0] + w[1] * d[1] + w[2] * d[2];
        }
    }
    Ok(out)
}

/// Stretching density `(ω·∇)u · ω`.
pub fn stretching_density(omega: &VectorField) -> Result<ScalarField> {
    vortex_stretching(omega)?.dot(omega)
}

/// Integrating-factor RK4 stepper.
pub struct Stepper {
    grid: GridSpec,
    dt_cfl: f64,
    nonlinear: Nonlinear,
    include_nonlinear: bool,
}

impl Stepper {
    pub fn new(grid: GridSpec, dt_cfl: f64, dealias: bool) -> Self {
        Self {
            grid,
            dt_cfl,
            nonlinear: Nonlinear::new(dealias),
            include_nonlinear: true,
        }
    }

    pub fn from_config(cfg: &SolverConfig) -> Self {
        Self::new(cfg.grid, cfg.dt_cfl, cfg.dealias)
    }

    /// Test hook: drop the nonlinear term so only viscous decay remains.
    pub fn linear_only(mut self) -> Self {
        self.include_nonlinear = false;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn eval(&self, w: &SpectralVector) -> Result<Evaluated> {
        if self.include_nonlinear {
            self.nonlinear.eval(w)
        } else {
            let phys = w.to_physical();
            Ok(Evaluated {
                rhs: SpectralVector::zeros(self.grid),
                max_velocity: biot_savart_hat(w).to_physical().max_norm(),
                max_vorticity: phys.max_norm(),
            })
        }
    }

    /// Largest step allowed by the Courant condition for velocity `max_u`.
    pub fn cfl_limit(&self, max_u: f64) -> f64 {
        if max_u > 0.0 {
            self.dt_cfl * self.grid.dx() / max_u
        } else {
            f64::INFINITY
        }
    }

    /// One step of size `dt` from physical vorticity.
    pub fn step(&self, omega: &VectorField, dt: f64) -> Result<VectorField> {
        self.grid.check_same(omega.grid())?;
        let hat = SpectralVector::try_forward(omega)?;
        let first = self.eval(&hat)?;
        let required = self.cfl_limit(first.max_velocity);
        if !(dt > 0.0) || dt > required {
            return Err(Error::Cfl { dt, required });
        }
        Ok(self.advance(&hat, first.rhs, dt)?.to_physical())
    }

    /// Completes an RK4 step given the first-stage nonlinear term.
    fn advance(&self, w: &SpectralVector, a: SpectralVector, dt: f64) -> Result<SpectralVector> {
        let grid = self.grid;
        let nu = grid.viscosity();
        let len = grid.len();
        let e_half: Vec<f64> = (0..len).map(|s| (-0.5 * nu * full_k2(&grid, s) * dt).exp()).collect();

        let combine = |base: &SpectralVector, base_factor: &dyn Fn(usize) -> f64, inc: &SpectralVector, inc_factor: &dyn Fn(usize) -> f64, h: f64| {
            let mut out = SpectralVector::zeros(grid);
            for c in 0..3 {
                let o = out.component_mut(c);
                let b = base.component(c);
                let i = inc.component(c);
                for s in 0..len {
                    o[s] = b[s] * base_factor(s) + i[s] * (h * inc_factor(s));
                }
            }
            out
        };
        let eh = |s: usize| e_half[s];
        let ef = |s: usize| e_half[s] * e_half[s];
        let one = |_s: usize| 1.0;

        // w_a = E½ (w + dt/2 a)
        let wa = combine(w, &eh, &a, &eh, 0.5 * dt);
        let b = self.eval(&wa)?.rhs;
        // w_b = E½ w + dt/2 b
        let wb = combine(w, &eh, &b, &one, 0.5 * dt);
        let c = self.eval(&wb)?.rhs;
        // w_c = E w + dt E½ c
        let wc = combine(w, &ef, &c, &eh, dt);
        let d = self.eval(&wc)?.rhs;

        let mut out = SpectralVector::zeros(grid);
        let h = dt / 6.0;
        for comp in 0..3 {
            let o = out.component_mut(comp);
            let (wv, av, bv, cv, dv) = (
                w.component(comp),
                a.component(comp),
                b.component(comp),
                c.component(comp),
                d.component(comp),
            );
            for s in 0..len {
                let e1 = e_half[s];
                let e2 = e1 * e1;
                let v: Complex64 =
                    wv[s] * e2 + (av[s] * e2 + (bv[s] + cv[s]) * (2.0 * e1) + dv[s]) * h;
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFiniteStep { time: f64::NAN });
                }
                o[s] = v;
            }
        }
        Ok(out)
    }
}

fn zero_mean(w: &mut SpectralVector) {
    w.set(0, [Complex64::default(); 3]);
}

/// Integrates from `ω₀` to `t_end`, storing snapshots at multiples of
/// `snapshot_every` (and at `t = 0`).
pub fn run(config: &SolverConfig, omega0: &VectorField) -> Result<Trajectory> {
    config.validate()?;
    config.grid.check_same(omega0.grid())?;
    let stepper = Stepper::from_config(config);
    let mut w = SpectralVector::try_forward(omega0)?;
    zero_mean(&mut w);
    if config.dealias {
        dealias_in_place(&mut w);
    }

    let mut times = vec![0.0];
    let mut snaps = vec![w.to_physical()];
    let mut history = Vec::new();
    let initial_max = snaps[0].max_norm();
    let limit = config.blowup_factor * initial_max;

    let n_snap = (config.t_end / config.snapshot_every - 1e-9).ceil().max(1.0) as usize;
    let snap_time = |i: usize| (i as f64 * config.snapshot_every).min(config.t_end);

    let mut t = 0.0;
    let mut next = 1usize;
    let mut steps = 0usize;
    let mut status = RunStatus::Complete;

    while next <= n_snap {
        let first = stepper.eval(&w).map_err(|e| retime(e, t))?;
        history.push(StepRecord {
            time: t,
            energy: energy_of(&w),
            enstrophy: enstrophy_of(&w),
        });
        if initial_max > 0.0 && first.max_vorticity > limit {
            status = RunStatus::UnderResolved {
                time: t,
                max_vorticity: first.max_vorticity,
            };
            break;
        }
        let target = snap_time(next);
        let cfl = stepper.cfl_limit(first.max_velocity);
        let mut dt = match config.dt {
            Some(dt) => {
                if dt > cfl * (1.0 + 1e-12) {
                    return Err(Error::Cfl { dt, required: cfl });
                }
                dt
            }
            None => cfl.min(config.t_end),
        };
        let remaining = target - t;
        let landed = dt >= remaining * (1.0 - 1e-10);
        if landed {
            dt = remaining;
        }
        w = stepper.advance(&w, first.rhs, dt).map_err(|e| retime(e, t))?;
        steps += 1;
        t = if landed { target } else { t + dt };
        if landed {
            times.push(t);
            snaps.push(w.to_physical());
            next += 1;
        }
    }
    if status == RunStatus::Complete {
        history.push(StepRecord {
            time: t,
            energy: energy_of(&w),
            enstrophy: enstrophy_of(&w),
        });
    }

    Ok(Trajectory {
        config: config.clone(),
        times,
        snapshots: snaps,
        history,
        status,
        steps,
    })
}

fn retime(e: Error, t: f64) -> Error {
    match e {
        Error::NonFiniteStep { .. } => Error::NonFiniteStep { time: t },
        other => other,
    }
}
