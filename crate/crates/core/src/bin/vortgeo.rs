use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use vortgeo::cascade::{CascadeConfig, DEFAULT_K1, DEFAULT_K2, MIN_VARIANTS};
use vortgeo::experiment::{
    self, load_run, CascadeBlock, ExperimentConfig, HarmonicBlock, OscillationBlock,
};
use vortgeo::geometry::{self, RegularityConditionConfig, DEFAULT_DIRECTIONS, MAX_DEFAULT_PROBES};
use vortgeo::grid::snapshot::Snapshot;
use vortgeo::harmonic::{self, DiskProblem, Layout, MIN_WALKERS};
use vortgeo::oscillation::{BmoVariant, Weight};
use vortgeo::solver::{SolverConfig, Trajectory};
use vortgeo::{Error, Result};

#[derive(Parser)]
#[command(name = "vortgeo", version, about = "Vorticity solver and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the scenario and integrate it; diagnostics blocks are ignored.
    Simulate(RunArgs),
    /// Full configured run with every enabled diagnostics block.
    Experiment(RunArgs),
    /// Sparseness scan of one snapshot's super-level set.
    Sparseness(SparsenessArgs),
    /// Multi-scale stretching report for a stored run.
    Cascade(CascadeArgs),
    /// Distribution, L log L, oscillation norms and sampling checks.
    Oscillation(OscillationArgs),
    /// Harmonic measure of segment sets in the unit disk.
    Harmonic(HarmonicArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SparsenessArgs {
    /// Snapshot file.
    snapshot: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    d0: f64,
    #[arg(long, default_value_t = 2.0)]
    c1: f64,
    #[arg(long, default_value_t = DEFAULT_DIRECTIONS)]
    n_dir: usize,
    /// Scan scale; defaults to the largest admissible one.
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, default_value_t = MAX_DEFAULT_PROBES)]
    max_probes: usize,
    /// Directory for `sparseness.json`; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CascadeArgs {
    /// Run manifest or its directory.
    run: PathBuf,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_K1)]
    k1: usize,
    #[arg(long, default_value_t = DEFAULT_K2)]
    k2: usize,
    #[arg(long, default_value_t = 0.75)]
    rho: f64,
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    /// Cover radii as fractions of the macro radius, comma separated.
    #[arg(long, value_delimiter = ',')]
    scales: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    constant: f64,
    #[arg(long, default_value_t = MIN_VARIANTS)]
    variants: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also evaluate the localized enstrophy budget.
    #[arg(long)]
    budget: bool,
    /// Directory for `cascade.json` and `cascade.csv`; JSON to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BmoArg {
    Bmo,
    LocalBmo,
    WeightedOne,
    WeightedInverseLog,
}

impl From<BmoArg> for BmoVariant {
    fn from(b: BmoArg) -> Self {
        match b {
            BmoArg::Bmo => BmoVariant::Bmo,
            BmoArg::LocalBmo => BmoVariant::LocalBmo,
            BmoArg::WeightedOne => BmoVariant::Weighted(Weight::One),
            BmoArg::WeightedInverseLog => BmoVariant::Weighted(Weight::InverseLog),
        }
    }
}

#[derive(Args)]
struct OscillationArgs {
    /// Snapshot file, run manifest or run directory.
    input: PathBuf,
    /// Number of thresholds for the distribution function.
    #[arg(long)]
    distribution: Option<usize>,
    #[arg(long)]
    llogl: bool,
    #[arg(long, value_enum)]
    bmo: Vec<BmoArg>,
    /// Direction monitor over all snapshots (needs a run).
    #[arg(long)]
    monitor: bool,
    #[arg(long, default_value_t = vortgeo::oscillation::DEFAULT_DIRECTION_THRESHOLD)]
    direction_threshold: f64,
    #[arg(long)]
    cr_check: Option<usize>,
    #[arg(long)]
    divcurl_check: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Centered,
    Periodic,
    Random,
}

#[derive(Args)]
struct HarmonicArgs {
    /// Print `h(δ)` and the minimal exponent.
    #[arg(long)]
    h_delta: Option<f64>,
    /// Estimate the measure of one layout.
    #[arg(long, value_enum)]
    measure: Option<LayoutArg>,
    /// Run the layout comparison table.
    #[arg(long)]
    study: bool,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    deltas: Vec<f64>,
    /// Starting point `x,y`.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5")]
    z0: Vec<f64>,
    #[arg(long, default_value_t = 4)]
    blocks: usize,
    #[arg(long, default_value_t = MIN_WALKERS)]
    walkers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit<T: Serialize>(out: Option<&Path>, name: &str, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), text + "\n")?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                other => other?,
            }
        }
    }
    Ok(())
}

fn run_config(args: &RunArgs, simulate_only: bool) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if simulate_only {
        cfg = cfg.simulation_only();
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set `output`".into()))?;
    let outcome = experiment::run_experiment(&cfg, &out)?;
    for b in outcome.failed_blocks() {
        eprintln!("block `{b}` failed; see {}", out.join(experiment::MANIFEST_FILE).display());
    }
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn sparseness(a: &SparsenessArgs) -> Result<()> {
    let snap = Snapshot::load(&a.snapshot)?;
    let time = snap.time;
    let w = snap.into_vector()?;
    let cfg = RegularityConditionConfig {
        d0: a.d0,
        c1: a.c1,
        n_dir: a.n_dir,
        max_probes: a.max_probes,
        ..RegularityConditionConfig::new(a.delta)
    };
    cfg.validate()?;
    let sup = w.max_norm();
    let r = a
        .scale
        .unwrap_or_else(|| cfg.max_scale(sup))
        .min(0.5 * w.grid().box_length());
    let mask = geometry::superlevel_at(&w, cfg.threshold(sup)?, time)?;
    let probes = geometry::default_probes(&mask, cfg.max_probes);
    #[derive(Serialize)]
    struct Out {
        scan: geometry::SparsenessReport,
        criticality: geometry::CriticalityRecord,
    }
    let out = Out {
        scan: geometry::sparseness_scan(&mask, &probes, r, a.delta, a.n_dir)?,
        criticality: geometry::criticality_scales(&w, a.c1, None)?,
    };
    emit(a.out.as_deref(), "sparseness.json", &out)
}

fn cascade(a: &CascadeArgs) -> Result<()> {
    let traj = load_run(&a.run)?;
    let block = CascadeBlock {
        t: a.t,
        k1: a.k1,
        k2: a.k2,
        constant: a.constant,
        variants: a.variants,
        scale_fractions: a.scales.clone(),
        budget: a.budget,
        config: CascadeConfig {
            rho: a.rho,
            kappa: a.kappa,
            ..CascadeConfig::default()
        },
    };
    let report = experiment::cascade_block_report(&traj, &block, a.seed)?;
    match &a.out {
        Some(dir) => {
            emit(Some(dir), "cascade.json", &report)?;
            experiment::write_cascade_csv(&report, &dir.join("cascade.csv"))
        }
        None => emit(None, "", &report),
    }
}

fn load_any(path: &Path) -> Result<Trajectory> {
    if path.is_dir() || path.extension().is_some_and(|e| e == "json") {
        return load_run(path);
    }
    let snap = Snapshot::load(path)?;
    let t = snap.time;
    let w = snap.into_vector()?;
    let g = *w.grid();
    Trajectory::from_snapshots(SolverConfig::new(g, t.max(1.0), t.max(1.0)), vec![(t, w)])
}

fn oscillation(a: &OscillationArgs) -> Result<()> {
    let traj = load_any(&a.input)?;
    let block = OscillationBlock {
        distribution: a.distribution,
        llogl: a.llogl,
        bmo: a.bmo.iter().map(|&b| b.into()).collect(),
        monitor: a.monitor,
        direction_threshold: a.direction_threshold,
        cr_check: a.cr_check,
        divcurl_check: a.divcurl_check,
    };
    let report = experiment::oscillation_report(&traj, &block, a.seed)?;
    emit(a.out.as_deref(), "oscillation.json", &report)
}

fn layout(arg: LayoutArg, blocks: usize, seed: u64) -> Layout {
    match arg {
        LayoutArg::Centered => Layout::Centered,
        LayoutArg::Periodic => Layout::Periodic { blocks },
        LayoutArg::Random => Layout::Random { blocks, seed },
    }
}

fn harmonic_cmd(a: &HarmonicArgs) -> Result<()> {
    if a.z0.len() != 2 {
        return Err(Error::Config("--z0 takes two numbers: x,y".into()));
    }
    let z0 = [a.z0[0], a.z0[1]];
    let mut any = false;
    if let Some(d) = a.h_delta {
        any = true;
        #[derive(Serialize)]
        struct H {
            delta: f64,
            h: f64,
            alpha_min: f64,
        }
        emit(
            a.out.as_deref(),
            "h_delta.json",
            &H {
                delta: d,
                h: harmonic::h_delta(d)?,
                alpha_min: harmonic::alpha_min(d)?,
            },
        )?;
    }
    if let Some(l) = a.measure {
        any = true;
        let delta = a.deltas[0];
        let set = layout(l, a.blocks, a.seed).intervals(delta)?;
        let est = harmonic::harmonic_measure_ws(&DiskProblem::new(set, z0, a.walkers, a.seed))?;
        emit(a.out.as_deref(), "measure.json", &est)?;
    }
    if a.study {
        any = true;
        let block = HarmonicBlock {
            deltas: a.deltas.clone(),
            starts: vec![z0],
            layouts: vec![
                Layout::Centered,
                Layout::Periodic { blocks: a.blocks },
                Layout::Random {
                    blocks: a.blocks,
                    seed: a.seed,
                },
            ],
            walkers: a.walkers,
        };
        let report = experiment::harmonic_report(&block, a.seed)?;
        match &a.out {
            Some(dir) => {
                emit(Some(dir), "harmonic.json", &report)?;
                experiment::write_study_csv(&report.rows, &dir.join("harmonic.csv"))?;
            }
            None => emit(None, "", &report)?,
        }
    }
    if !any {
        return Err(Error::Config("pass --h-delta, --measure or --study".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => run_config(a, true),
        Command::Experiment(a) => run_config(a, false),
        Command::Sparseness(a) => sparseness(a),
        Command::Cascade(a) => cascade(a),
        Command::Oscillation(a) => oscillation(a),
        Command::Harmonic(a) => harmonic_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
