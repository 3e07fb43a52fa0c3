//! C ABI over `vortgeo`.
//!
//! Objects cross the boundary as opaque handles created by `vg_*_new`-style
//! functions and released with the matching `vg_*_free`. Every fallible call
//! returns a [`VgStatus`]; on failure `vg_last_error` describes the cause for
//! the calling thread. Structured reports are returned as JSON strings owned
//! by the caller and released with `vg_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use vortgeo::cascade::{self, CascadeConfig, CascadeRequest};
use vortgeo::experiment::{self, ExperimentConfig};
use vortgeo::geometry::{self, RegularityConditionConfig};
use vortgeo::grid::snapshot::Snapshot;
use vortgeo::harmonic::{self, DiskProblem};
use vortgeo::scenario::{generate, Scenario, ScenarioKind};
use vortgeo::solver::{self, SolverConfig, Trajectory};
use vortgeo::{Error, GridSpec, VectorField};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGrid = 3,
    GridMismatch = 4,
    NonFinite = 5,
    Cfl = 6,
    CoverInfeasible = 7,
    InsufficientSnapshots = 8,
    Io = 9,
    Format = 10,
    Config = 11,
    OutOfRange = 12,
    Panic = 13,
}

/// Grid resolution, box length and viscosity.
pub struct VgGrid(GridSpec);

/// Vorticity (or any vector) field on a grid.
pub struct VgField(VectorField);

/// Stored snapshots of a run.
pub struct VgTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> VgStatus {
    match e {
        Error::InvalidGrid(_) => VgStatus::InvalidGrid,
        Error::GridMismatch { .. } => VgStatus::GridMismatch,
        Error::NonFinite { .. } | Error::NonFiniteStep { .. } => VgStatus::NonFinite,
        Error::InvalidParameter { .. } => VgStatus::InvalidArgument,
        Error::Cfl { .. } => VgStatus::Cfl,
        Error::CoverInfeasible { .. } => VgStatus::CoverInfeasible,
        Error::InsufficientSnapshots(_) => VgStatus::InsufficientSnapshots,
        Error::Snapshot(_) | Error::Json(_) => VgStatus::Format,
        Error::Config(_) => VgStatus::Config,
        Error::Io(_) => VgStatus::Io,
    }
}

struct Fail(VgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type Out<T> = std::result::Result<T, Fail>;

fn guard(f: impl FnOnce() -> Out<()>) -> VgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            VgStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            VgStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Out<&'a T> {
    p.as_ref()
        .ok_or_else(|| Fail(VgStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Out<&'a mut T> {
    p.as_mut()
        .ok_or_else(|| Fail(VgStatus::NullPointer, format!("{what} is null")))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Out<&'a str> {
    if p.is_null() {
        return Err(Fail(VgStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(VgStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn into_c_string(s: String) -> Out<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(VgStatus::Format, "string contains NUL".into()))
}

fn json<T: serde::Serialize>(v: &T) -> Out<*mut c_char> {
    into_c_string(serde_json::to_string(v).map_err(Error::from)?)
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn vg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn vg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn vg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vg_grid_new(n: usize, box_length: f64, viscosity: f64, out: *mut *mut VgGrid) -> VgStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(VgGrid(GridSpec::new(n, box_length, viscosity)?)));
        Ok(())
    })
}

/// # Safety
/// `grid` must come from `vg_grid_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn vg_grid_free(grid: *mut VgGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Points per axis; zero for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vg_grid_n(grid: *const VgGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.n())
}

/// Generates an initial vorticity field. `scenario_json` is an object such as
/// `{"kind": "burgers_tube", "radius": 0.5, "circulation": 1, "axis": "z"}`.
///
/// # Safety
/// Pointers must be valid; `scenario_json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn vg_scenario_generate(
    grid: *const VgGrid,
    scenario_json: *const c_char,
    amplitude: f64,
    out: *mut *mut VgField,
) -> VgStatus {
    guard(|| {
        let g = borrow(grid, "grid")?.0;
        let kind: ScenarioKind = serde_json::from_str(text(scenario_json, "scenario_json")?)
            .map_err(|e| Fail(VgStatus::Config, e.to_string()))?;
        let out = out_ptr(out, "out")?;
        let s = Scenario::new(kind, amplitude, g);
        s.validate()?;
        *out = Box::into_raw(Box::new(VgField(generate(&s)?)));
        Ok(())
    })
}

/// Builds a field from three arrays of `n³` values in grid order.
///
/// # Safety
/// Each component pointer must reference `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn vg_field_from_components(
    grid: *const VgGrid,
    x: *const f64,
    y: *const f64,
    z: *const f64,
    len: usize,
    out: *mut *mut VgField,
) -> VgStatus {
    guard(|| {
        let g = borrow(grid, "grid")?.0;
        if len != g.len() {
            return Err(Fail(
                VgStatus::InvalidArgument,
                format!("component length {len} differs from n^3 = {}", g.len()),
            ));
        }
        let read = |p: *const f64, what: &str| -> Out<Vec<f64>> {
            if p.is_null() {
                return Err(Fail(VgStatus::NullPointer, format!("{what} is null")));
            }
            Ok(std::slice::from_raw_parts(p, len).to_vec())
        };
        let f = VectorField::new(g, [read(x, "x")?, read(y, "y")?, read(z, "z")?])?;
        *out_ptr(out, "out")? = Box::into_raw(Box::new(VgField(f)));
        Ok(())
    })
}

/// # Safety
/// `field` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn vg_field_free(field: *mut VgField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Copies component `c` (0, 1 or 2) into `buf`, which holds `len` doubles.
///
/// # Safety
/// `buf` must reference `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn vg_field_component(field: *const VgField, c: usize, buf: *mut f64, len: usize) -> VgStatus {
    guard(|| {
        let f = &borrow(field, "field")?.0;
        if c > 2 {
            return Err(Fail(VgStatus::OutOfRange, format!("component {c} not in 0..3")));
        }
        let src = f.component(c);
        if len < src.len() {
            return Err(Fail(
                VgStatus::InvalidArgument,
                format!("buffer holds {len} values, need {}", src.len()),
            ));
        }
        if buf.is_null() {
            return Err(Fail(VgStatus::NullPointer, "buf is null".into()));
        }
        std::slice::from_raw_parts_mut(buf, src.len()).copy_from_slice(src);
        Ok(())
    })
}

/// `‖ω‖∞`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn vg_field_max_norm(field: *const VgField, out: *mut f64) -> VgStatus {
    guard(|| {
        let v = borrow(field, "field")?.0.max_norm();
        *out_ptr(out, "out")? = v;
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn vg_snapshot_save(field: *const VgField, time: f64, path: *const c_char) -> VgStatus {
    guard(|| {
        let f = &borrow(field, "field")?.0;
        Snapshot::from_vector(f, time).save(text(path, "path")?)?;
        Ok(())
    })
}

/// Reads a snapshot; also returns its grid through `grid_out` when non-null.
///
/// # Safety
/// Pointers must be valid; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn vg_snapshot_load(
    path: *const c_char,
    field_out: *mut *mut VgField,
    time_out: *mut f64,
    grid_out: *mut *mut VgGrid,
) -> VgStatus {
    guard(|| {
        let s = Snapshot::load(text(path, "path")?)?;
        let t = s.time;
        let g = s.grid;
        let f = s.into_vector()?;
        let field_out = out_ptr(field_out, "field_out")?;
        if let Some(t_out) = time_out.as_mut() {
            *t_out = t;
        }
        if let Some(g_out) = grid_out.as_mut() {
            *g_out = Box::into_raw(Box::new(VgGrid(g)));
        }
        *field_out = Box::into_raw(Box::new(VgField(f)));
        Ok(())
    })
}

/// Integrates from `omega0` to `t_end` with snapshots every `snapshot_every`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn vg_run(
    omega0: *const VgField,
    t_end: f64,
    snapshot_every: f64,
    out: *mut *mut VgTrajectory,
) -> VgStatus {
    guard(|| {
        let w = &borrow(omega0, "omega0")?.0;
        let cfg = SolverConfig::new(*w.grid(), t_end, snapshot_every);
        let traj = solver::run(&cfg, w)?;
        *out_ptr(out, "out")? = Box::into_raw(Box::new(VgTrajectory(traj)));
        Ok(())
    })
}

/// Loads a run written by `vg_experiment_run` or the CLI.
///
/// # Safety
/// Pointers must be valid; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn vg_trajectory_load(path: *const c_char, out: *mut *mut VgTrajectory) -> VgStatus {
    guard(|| {
        let traj = experiment::load_run(text(path, "path")?)?;
        *out_ptr(out, "out")? = Box::into_raw(Box::new(VgTrajectory(traj)));
        Ok(())
    })
}

/// # Safety
/// `traj` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn vg_trajectory_free(traj: *mut VgTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of stored snapshots; zero for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vg_trajectory_len(traj: *const VgTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.len())
}

/// Time and a copy of snapshot `index`; `field_out` may be null.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn vg_trajectory_snapshot(
    traj: *const VgTrajectory,
    index: usize,
    time_out: *mut f64,
    field_out: *mut *mut VgField,
) -> VgStatus {
    guard(|| {
        let t = &borrow(traj, "traj")?.0;
        if index >= t.len() {
            return Err(Fail(
                VgStatus::OutOfRange,
                format!("snapshot {index} out of {}", t.len()),
            ));
        }
        *out_ptr(time_out, "time_out")? = t.times()[index];
        if let Some(f) = field_out.as_mut() {
            *f = Box::into_raw(Box::new(VgField(t.snapshots()[index].clone())));
        }
        Ok(())
    })
}

/// `h(δ)` for `δ ∈ (0, 1)`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vg_h_delta(delta: f64, out: *mut f64) -> VgStatus {
    guard(|| {
        let h = harmonic::h_delta(delta)?;
        *out_ptr(out, "out")? = h;
        Ok(())
    })
}

/// Walk-on-spheres harmonic measure of `count` intervals `[a, b] ⊂ [−1, 1]`
/// (stored as `a0, b0, a1, b1, …`) seen from `(x, y)` in the unit disk.
///
/// # Safety
/// `intervals` must reference `2 * count` doubles; outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn vg_harmonic_measure(
    intervals: *const f64,
    count: usize,
    x: f64,
    y: f64,
    walkers: usize,
    seed: u64,
    estimate: *mut f64,
    stderr: *mut f64,
) -> VgStatus {
    guard(|| {
        let set: Vec<[f64; 2]> = if count == 0 {
            Vec::new()
        } else {
            if intervals.is_null() {
                return Err(Fail(VgStatus::NullPointer, "intervals is null".into()));
            }
            std::slice::from_raw_parts(intervals, 2 * count)
                .chunks(2)
                .map(|c| [c[0], c[1]])
                .collect()
        };
        let est = harmonic::harmonic_measure_ws(&DiskProblem::new(set, [x, y], walkers, seed))?;
        *out_ptr(estimate, "estimate")? = est.estimate;
        *out_ptr(stderr, "stderr")? = est.stderr;
        Ok(())
    })
}

/// Criticality record of one field as JSON.
///
/// # Safety
/// Pointers must be valid; release the string with `vg_string_free`.
#[no_mangle]
pub unsafe extern "C" fn vg_criticality_json(field: *const VgField, c1: f64, out: *mut *mut c_char) -> VgStatus {
    guard(|| {
        let rec = geometry::criticality_scales(&borrow(field, "field")?.0, c1, None)?;
        *out_ptr(out, "out")? = json(&rec)?;
        Ok(())
    })
}

/// Windowed sparseness report of a run as JSON.
///
/// # Safety
/// Pointers must be valid; release the string with `vg_string_free`.
#[no_mangle]
pub unsafe extern "C" fn vg_regularity_json(
    traj: *const VgTrajectory,
    delta: f64,
    d0: f64,
    n_dir: usize,
    out: *mut *mut c_char,
) -> VgStatus {
    guard(|| {
        let cfg = RegularityConditionConfig {
            d0,
            n_dir,
            ..RegularityConditionConfig::new(delta)
        };
        let rep = geometry::regularity_condition_report(&borrow(traj, "traj")?.0, &cfg)?;
        *out_ptr(out, "out")? = json(&rep)?;
        Ok(())
    })
}

/// Multi-scale stretching report at time `t` as JSON. `scales` holds
/// `scale_count` cover radii as fractions of the macro radius; with zero
/// the admissible dyadic scales are used.
///
/// # Safety
/// Pointers must be valid; release the string with `vg_string_free`.
#[no_mangle]
pub unsafe extern "C" fn vg_cascade_json(
    traj: *const VgTrajectory,
    t: f64,
    k1: usize,
    k2: usize,
    constant: f64,
    scales: *const f64,
    scale_count: usize,
    seed: u64,
    out: *mut *mut c_char,
) -> VgStatus {
    guard(|| {
        let traj = &borrow(traj, "traj")?.0;
        let cfg = CascadeConfig::default();
        let r0 = cfg.macro_radius(traj.grid());
        let fractions: &[f64] = if scale_count == 0 {
            &[]
        } else if scales.is_null() {
            return Err(Fail(VgStatus::NullPointer, "scales is null".into()));
        } else {
            std::slice::from_raw_parts(scales, scale_count)
        };
        let req = CascadeRequest {
            seed,
            scales: fractions.iter().map(|f| f * r0).collect(),
            ..CascadeRequest::new(k1, k2, constant)
        };
        let rep = cascade::cascade_report(traj, t, &req, &cfg)?;
        *out_ptr(out, "out")? = json(&rep)?;
        Ok(())
    })
}

/// Runs a TOML experiment configuration into `out_dir`.
///
/// # Safety
/// Strings must be valid and NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn vg_experiment_run(config_path: *const c_char, out_dir: *const c_char) -> VgStatus {
    guard(|| {
        let cfg = ExperimentConfig::load(text(config_path, "config_path")?)?;
        experiment::run_experiment(&cfg, Path::new(text(out_dir, "out_dir")?))?;
        Ok(())
    })
}
