//! Configured runs: scenario, solver, diagnostics blocks and the files they
//! leave behind.
//!
//! An output directory holds `manifest.json`, `snapshots/*.vscp` and one
//! report per enabled block. Scientific verdicts are data; only invalid
//! configurations, I/O failures and solver errors surface as `Err`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cascade::{self, CascadeConfig, CascadeRequest, LocalityReport, ScaleVerdict};
use crate::error::{Error, Result};
use crate::geometry::{self, CriticalityRecord, RegularityConditionConfig, RegularityReport};
use crate::grid::snapshot::Snapshot;
use crate::grid::GridSpec;
use crate::harmonic::{self, Layout, StudyRow};
use crate::oscillation::{self, BmoReport, BmoVariant, DirectionMonitor, OscillationConfig, SamplingStats};
use crate::scenario::{generate, Scenario, ScenarioKind};
use crate::solver::{run, RunStatus, SolverConfig, StepRecord, Trajectory};

pub const CONFIG_VERSION: u32 = 1;
pub const REPORT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    /// Seed for every randomized diagnostic. Scenario seeds are separate.
    #[serde(default)]
    pub seed: u64,
    /// Not echoed into the manifest so reruns elsewhere stay byte-identical.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    pub grid: GridSection,
    pub scenario: ScenarioSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub geometry: Option<GeometryBlock>,
    #[serde(default)]
    pub cascade: Option<CascadeBlock>,
    #[serde(default)]
    pub oscillation: Option<OscillationBlock>,
    #[serde(default)]
    pub harmonic: Option<HarmonicBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    #[serde(default = "tau")]
    pub box_length: f64,
    pub viscosity: f64,
}

fn tau() -> f64 {
    std::f64::consts::TAU
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSection {
    #[serde(flatten)]
    pub kind: ScenarioKind,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub t_end: f64,
    pub snapshot_every: f64,
    #[serde(default = "default_cfl")]
    pub dt_cfl: f64,
    #[serde(default = "yes")]
    pub dealias: bool,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_blowup")]
    pub blowup_factor: f64,
}

fn default_cfl() -> f64 {
    0.4
}
fn yes() -> bool {
    true
}
fn default_blowup() -> f64 {
    1e6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryBlock {
    #[serde(flatten)]
    pub condition: RegularityConditionConfig,
    #[serde(default = "yes")]
    pub criticality: bool,
    #[serde(default)]
    pub filament_length: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeBlock {
    /// Evaluation time; defaults to the last snapshot.
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default = "default_k1")]
    pub k1: usize,
    #[serde(default = "default_k2")]
    pub k2: usize,
    #[serde(default = "default_constant")]
    pub constant: f64,
    #[serde(default = "default_variants")]
    pub variants: usize,
    /// Cover radii as fractions of `R₀`; empty selects the admissible
    /// dyadic scales.
    #[serde(default)]
    pub scale_fractions: Vec<f64>,
    #[serde(default)]
    pub budget: bool,
    #[serde(flatten)]
    pub config: CascadeConfig,
}

fn default_k1() -> usize {
    cascade::DEFAULT_K1
}
fn default_k2() -> usize {
    cascade::DEFAULT_K2
}
fn default_constant() -> f64 {
    2.0
}
fn default_variants() -> usize {
    cascade::MIN_VARIANTS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillationBlock {
    /// Number of thresholds for the distribution function of `|ω|`.
    #[serde(default)]
    pub distribution: Option<usize>,
    #[serde(default)]
    pub llogl: bool,
    /// Norms of `|ω|` at the last snapshot.
    #[serde(default)]
    pub bmo: Vec<BmoVariant>,
    #[serde(default)]
    pub monitor: bool,
    #[serde(default = "default_direction_threshold")]
    pub direction_threshold: f64,
    #[serde(default)]
    pub cr_check: Option<usize>,
    #[serde(default)]
    pub divcurl_check: Option<usize>,
}

fn default_direction_threshold() -> f64 {
    oscillation::DEFAULT_DIRECTION_THRESHOLD
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicBlock {
    pub deltas: Vec<f64>,
    #[serde(default = "default_starts")]
    pub starts: Vec<[f64; 2]>,
    #[serde(default = "default_layouts")]
    pub layouts: Vec<Layout>,
    #[serde(default = "default_walkers")]
    pub walkers: usize,
}

fn default_starts() -> Vec<[f64; 2]> {
    vec![[0.0, 0.5]]
}
fn default_layouts() -> Vec<Layout> {
    vec![Layout::Centered]
}
fn default_walkers() -> usize {
    harmonic::MIN_WALKERS
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.n, self.grid.box_length, self.grid.viscosity)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Ok(Scenario::new(self.scenario.kind.clone(), self.scenario.amplitude, self.grid()?))
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        Ok(SolverConfig {
            grid: self.grid()?,
            dt_cfl: s.dt_cfl,
            t_end: s.t_end,
            snapshot_every: s.snapshot_every,
            dealias: s.dealias,
            dt: s.dt,
            blowup_factor: s.blowup_factor,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {}, expected {CONFIG_VERSION}",
                self.version
            )));
        }
        self.scenario()?.validate()?;
        self.solver()?.validate()?;
        if let Some(g) = &self.geometry {
            g.condition.validate()?;
        }
        if let Some(c) = &self.cascade {
            if c.k1 == 0 || c.k2 == 0 {
                return Err(Error::Config("cascade: k1 and k2 must be positive".into()));
            }
            if !(c.constant > 1.0) {
                return Err(Error::Config("cascade: constant must exceed 1".into()));
            }
            if c.variants < cascade::MIN_VARIANTS {
                return Err(Error::Config(format!(
                    "cascade: variants must be >= {}",
                    cascade::MIN_VARIANTS
                )));
            }
            if c.scale_fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
                return Err(Error::Config("cascade: scale fractions must lie in (0, 1]".into()));
            }
        }
        if let Some(h) = &self.harmonic {
            if h.walkers < harmonic::MIN_WALKERS {
                return Err(Error::Config(format!(
                    "harmonic: walkers must be >= {}",
                    harmonic::MIN_WALKERS
                )));
            }
            if h.deltas.is_empty() || h.starts.is_empty() || h.layouts.is_empty() {
                return Err(Error::Config("harmonic: deltas, starts and layouts must be non-empty".into()));
            }
        }
        Ok(())
    }

    /// Copy without diagnostics blocks.
    pub fn simulation_only(&self) -> Self {
        Self {
            geometry: None,
            cascade: None,
            oscillation: None,
            harmonic: None,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub time: f64,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BlockStatus {
    Ok { files: Vec<String> },
    Failed { error: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub block: String,
    #[serde(flatten)]
    pub status: BlockStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub report_version: u32,
    pub config: ExperimentConfig,
    pub solver: SolverConfig,
    pub run_status: RunStatus,
    pub steps: usize,
    pub snapshots: Vec<SnapshotEntry>,
    pub history: Vec<StepRecord>,
    pub blocks: Vec<BlockRecord>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// Reads the stored snapshots back into a trajectory. `dir` is the
    /// directory holding the manifest.
    pub fn trajectory(&self, dir: impl AsRef<Path>) -> Result<Trajectory> {
        let mut snaps = Vec::with_capacity(self.snapshots.len());
        for e in &self.snapshots {
            let s = Snapshot::load(dir.as_ref().join(&e.file))?;
            if s.grid != self.solver.grid {
                return Err(Error::Snapshot(format!("{} does not match the run grid", e.file)));
            }
            snaps.push((e.time, s.into_vector()?));
        }
        Trajectory::from_snapshots(self.solver.clone(), snaps)
    }
}

/// Loads a trajectory from a manifest path or a directory containing one.
pub fn load_run(path: impl AsRef<Path>) -> Result<Trajectory> {
    let p = path.as_ref();
    let (manifest, dir) = if p.is_dir() {
        (p.join(MANIFEST_FILE), p.to_path_buf())
    } else {
        (p.to_path_buf(), p.parent().map(Path::to_path_buf).unwrap_or_default())
    };
    Manifest::load(manifest)?.trajectory(dir)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub report_version: u32,
    pub regularity: RegularityReport,
    pub criticality: Option<CriticalityRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeReport {
    pub report_version: u32,
    pub macro_radius: f64,
    pub locality: LocalityReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionSeries {
    pub beta: Vec<f64>,
    pub lambda: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub report_version: u32,
    pub time: f64,
    pub distribution: Option<DistributionSeries>,
    pub llogl: Option<f64>,
    pub bmo: Vec<BmoReport>,
    pub monitor: Option<DirectionMonitor>,
    pub coifman_rochberg: Option<SamplingStats>,
    pub div_curl: Option<SamplingStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HRow {
    pub delta: f64,
    pub h: f64,
    pub alpha_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicReport {
    pub report_version: u32,
    pub walkers: usize,
    pub seed: u64,
    pub h_table: Vec<HRow>,
    pub rows: Vec<StudyRow>,
}

/// Paths and outcome of a finished experiment.
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl ExperimentOutcome {
    pub fn failed_blocks(&self) -> Vec<&str> {
        self.manifest
            .blocks
            .iter()
            .filter(|b| matches!(b.status, BlockStatus::Failed { .. }))
            .map(|b| b.block.as_str())
            .collect()
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Runs scenario, solver and every enabled block, writing into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: impl AsRef<Path>) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let out = out.as_ref();
    fs::create_dir_all(out.join("snapshots"))?;
    let omega0 = generate(&cfg.scenario()?)?;
    let solver = cfg.solver()?;
    log::info!("running {} to t = {}", cfg.scenario.kind.name(), solver.t_end);
    let traj = run(&solver, &omega0)?;

    let mut snapshots = Vec::with_capacity(traj.len());
    for (i, (t, w)) in traj.iter().enumerate() {
        let file = format!("snapshots/snap_{i:05}.vscp");
        Snapshot::from_vector(w, t).save(out.join(&file))?;
        snapshots.push(SnapshotEntry { time: t, file });
    }

    let mut blocks = Vec::new();
    if let Some(b) = &cfg.geometry {
        blocks.push(record("geometry", geometry_block(&traj, b, out)));
    }
    if let Some(b) = &cfg.cascade {
        blocks.push(record("cascade", cascade_block(&traj, b, cfg.seed, out)));
    }
    if let Some(b) = &cfg.oscillation {
        blocks.push(record("oscillation", oscillation_block(&traj, b, cfg.seed, out)));
    }
    if let Some(b) = &cfg.harmonic {
        blocks.push(record("harmonic", harmonic_block(b, cfg.seed, out)));
    }

    let manifest = Manifest {
        report_version: REPORT_VERSION,
        config: cfg.clone(),
        solver,
        run_status: traj.status.clone(),
        steps: traj.steps,
        snapshots,
        history: traj.history.clone(),
        blocks,
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(ExperimentOutcome {
        dir: out.to_path_buf(),
        manifest,
    })
}

fn record(name: &str, result: Result<Vec<String>>) -> BlockRecord {
    let status = match result {
        Ok(files) => BlockStatus::Ok { files },
        Err(e) => {
            log::warn!("{name} block failed: {e}");
            BlockStatus::Failed { error: e.to_string() }
        }
    };
    BlockRecord {
        block: name.into(),
        status,
    }
}

pub fn geometry_report(traj: &Trajectory, b: &GeometryBlock) -> Result<GeometryReport> {
    let regularity = geometry::regularity_condition_report(traj, &b.condition)?;
    let criticality = if b.criticality {
        let (_, w) = traj
            .last()
            .ok_or_else(|| Error::InsufficientSnapshots("empty trajectory".into()))?;
        Some(geometry::criticality_scales(w, b.condition.c1, b.filament_length)?)
    } else {
        None
    };
    Ok(GeometryReport {
        report_version: REPORT_VERSION,
        regularity,
        criticality,
    })
}

fn geometry_block(traj: &Trajectory, b: &GeometryBlock, out: &Path) -> Result<Vec<String>> {
    let report = geometry_report(traj, b)?;
    write_json(&out.join("geometry.json"), &report)?;
    Ok(vec!["geometry.json".into()])
}

pub fn cascade_block_report(traj: &Trajectory, b: &CascadeBlock, seed: u64) -> Result<CascadeReport> {
    let g = *traj.grid();
    let t = match b.t {
        Some(t) => t,
        None => traj
            .times()
            .last()
            .copied()
            .ok_or_else(|| Error::InsufficientSnapshots("empty trajectory".into()))?,
    };
    let r0 = b.config.macro_radius(&g);
    let req = CascadeRequest {
        k1: b.k1,
        k2: b.k2,
        constant: b.constant,
        variants: b.variants,
        seed,
        scales: b.scale_fractions.iter().map(|f| f * r0).collect(),
        budget: b.budget,
    };
    Ok(CascadeReport {
        report_version: REPORT_VERSION,
        macro_radius: r0,
        locality: cascade::cascade_report(traj, t, &req, &b.config)?,
    })
}

/// `(R, ⟨VST⟩, spread_min, spread_max, Ĉ)` rows; `Ĉ` is empty on sign failure.
pub fn write_cascade_csv(report: &CascadeReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["R", "mean_vst", "spread_min", "spread_max", "c_hat", "in_range"])
        .map_err(csv_error)?;
    for r in &report.locality.rows {
        let c_hat = match r.verdict {
            ScaleVerdict::Measured { c_hat, .. } => c_hat.to_string(),
            ScaleVerdict::SignFail => "sign-fail".into(),
        };
        w.write_record([
            r.scale.to_string(),
            r.mean_vst.to_string(),
            r.spread_min.to_string(),
            r.spread_max.to_string(),
            c_hat,
            r.in_range.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn cascade_block(traj: &Trajectory, b: &CascadeBlock, seed: u64, out: &Path) -> Result<Vec<String>> {
    let report = cascade_block_report(traj, b, seed)?;
    write_json(&out.join("cascade.json"), &report)?;
    write_cascade_csv(&report, &out.join("cascade.csv"))?;
    Ok(vec!["cascade.json".into(), "cascade.csv".into()])
}

pub fn oscillation_report(traj: &Trajectory, b: &OscillationBlock, seed: u64) -> Result<OscillationReport> {
    let g = *traj.grid();
    let (time, w) = traj
        .last()
        .ok_or_else(|| Error::InsufficientSnapshots("empty trajectory".into()))?;
    let magnitude = w.magnitude();
    let distribution = match b.distribution {
        Some(count) => {
            let max = magnitude.max_abs();
            if !(max > 0.0) || count < 2 {
                return Err(Error::Config(
                    "oscillation: distribution needs a nonzero field and at least 2 thresholds".into(),
                ));
            }
            let beta: Vec<f64> = (0..count)
                .map(|i| max * 1e-3f64.powf(1.0 - i as f64 / (count - 1) as f64))
                .collect();
            let lambda = oscillation::distribution_function(&magnitude, &beta)?;
            Some(DistributionSeries { beta, lambda })
        }
        None => None,
    };
    let psi = || {
        let c = CascadeConfig::default();
        cascade::macro_cutoff(&g, c.centre(&g), c.macro_radius(&g), c.rho)
    };
    let llogl = if b.llogl { Some(oscillation::llogl(w, &psi()?)?) } else { None };
    let ocfg = OscillationConfig::for_grid(&g);
    let bmo = b
        .bmo
        .iter()
        .map(|&v| oscillation::bmo_norm(&magnitude, v, &ocfg))
        .collect::<Result<Vec<_>>>()?;
    let monitor = if b.monitor {
        Some(oscillation::direction_monitor(traj, &psi()?, b.direction_threshold, &ocfg)?)
    } else {
        None
    };
    let coifman_rochberg = match b.cr_check {
        Some(n) => Some(oscillation::coifman_rochberg_check(&g, n, seed)?),
        None => None,
    };
    let div_curl = match b.divcurl_check {
        Some(n) => Some(oscillation::div_curl_check(&g, n, seed)?),
        None => None,
    };
    Ok(OscillationReport {
        report_version: REPORT_VERSION,
        time,
        distribution,
        llogl,
        bmo,
        monitor,
        coifman_rochberg,
        div_curl,
    })
}

fn oscillation_block(traj: &Trajectory, b: &OscillationBlock, seed: u64, out: &Path) -> Result<Vec<String>> {
    let report = oscillation_report(traj, b, seed)?;
    write_json(&out.join("oscillation.json"), &report)?;
    let mut files = vec!["oscillation.json".to_string()];
    if let Some(d) = &report.distribution {
        let mut w = csv::Writer::from_path(out.join("distribution.csv")).map_err(csv_error)?;
        w.write_record(["beta", "lambda"]).map_err(csv_error)?;
        for (b, l) in d.beta.iter().zip(&d.lambda) {
            w.write_record([b.to_string(), l.to_string()]).map_err(csv_error)?;
        }
        w.flush()?;
        files.push("distribution.csv".into());
    }
    Ok(files)
}

pub fn harmonic_report(b: &HarmonicBlock, seed: u64) -> Result<HarmonicReport> {
    let h_table = b
        .deltas
        .iter()
        .map(|&d| {
            Ok(HRow {
                delta: d,
                h: harmonic::h_delta(d)?,
                alpha_min: harmonic::alpha_min(d)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = harmonic::sparse_segment_study(&b.deltas, &b.starts, &b.layouts, b.walkers, seed)?;
    Ok(HarmonicReport {
        report_version: REPORT_VERSION,
        walkers: b.walkers,
        seed,
        h_table,
        rows,
    })
}

pub fn write_study_csv(rows: &[StudyRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["delta", "layout", "z0_re", "z0_im", "estimate", "stderr", "h"])
        .map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.delta.to_string(),
            r.layout.clone(),
            r.z0[0].to_string(),
            r.z0[1].to_string(),
            r.estimate.to_string(),
            r.stderr.to_string(),
            r.h.map(|h| h.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn harmonic_block(b: &HarmonicBlock, seed: u64, out: &Path) -> Result<Vec<String>> {
    let report = harmonic_report(b, seed)?;
    write_json(&out.join("harmonic.json"), &report)?;
    write_study_csv(&report.rows, &out.join("harmonic.csv"))?;
    Ok(vec!["harmonic.json".into(), "harmonic.csv".into()])
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
version = 1

[grid]
n = 8
viscosity = 0.1

[scenario]
kind = "taylor_green_2d3d"

[solver]
t_end = 0.02
snapshot_every = 0.02
dt = 0.01
"#;

    #[test]
    fn minimal_run_writes_manifest_and_snapshots() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = run_experiment(&cfg, dir.path()).unwrap();
        assert_eq!(out.manifest.steps, 2);
        assert_eq!(out.manifest.snapshots.len(), 2);
        assert!(out.manifest.blocks.is_empty());
        assert!(dir.path().join(MANIFEST_FILE).exists());
        let traj = load_run(dir.path()).unwrap();
        assert_eq!(traj.times(), &[0.0, 0.02]);
    }

    #[test]
    fn rejects_unknown_keys_and_versions() {
        let bad = MINIMAL.replace("version = 1", "version = 2");
        assert!(matches!(ExperimentConfig::from_toml(&bad), Err(Error::Config(_))));
        let extra = format!("{MINIMAL}\n[extra]\nx = 1\n");
        assert!(ExperimentConfig::from_toml(&extra).is_err());
    }

    #[test]
    fn failed_block_does_not_stop_others() {
        let text = format!(
            "{MINIMAL}\n[cascade]\nk1 = 16\n\n[harmonic]\ndeltas = [0.5]\nwalkers = 10000\n"
        );
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = run_experiment(&cfg, dir.path()).unwrap();
        // two snapshots are too few for the time window
        assert_eq!(out.failed_blocks(), vec!["cascade"]);
        assert!(dir.path().join("harmonic.json").exists());
        assert!(!dir.path().join("cascade.json").exists());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }
}
