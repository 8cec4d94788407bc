use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use gcrb::bayes::{PhaseDomain, DEFAULT_BETAS, DEFAULT_GRID_POINTS};
use gcrb::error::Error;
use gcrb::ingest;
use gcrb::montecarlo::{CampaignConfig, MomentUncertainty, ViolationWindow, WindowSide};
use gcrb::report::{self, AnalyzeOptions, RunManifest};

/// Generalized Cramér-Rao bound diagnostics for N00N phase estimation.
#[derive(Parser)]
#[command(name = "gcrb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Violation fractions Σ_β over a sweep of estimated visibilities.
    Simulate(SimulateArgs),
    /// Generalized Fisher information and order-β bounds.
    Bounds(BoundsArgs),
    /// Moments, κ_β and Gaussianity ratios of measured counts.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct Common {
    /// Moment order β (> 1); repeatable. Default 1.5, 2, 3, 4.
    #[arg(long = "beta")]
    betas: Vec<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    /// Prior support lo:hi in radians. Default 0:π/2.
    #[arg(long)]
    domain: Option<String>,
    /// Output CSV path; a `.manifest.json` is written beside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON file with any of the flag values; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    phase_true: Option<f64>,
    #[arg(long)]
    v_true: Option<f64>,
    /// Estimated visibility, repeatable, or a range a:b:step.
    #[arg(long = "v-est")]
    v_est: Vec<String>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    experiments: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Width of the violation window in σ_β.
    #[arg(long)]
    window_sigmas: Option<f64>,
    #[arg(long, value_enum)]
    uncertainty: Option<UncertaintyArg>,
    #[arg(long, value_enum)]
    side: Option<SideArg>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BoundsArgs {
    /// Phase, repeatable, or a range a:b:step.
    #[arg(long = "phase", required = true)]
    phases: Vec<String>,
    #[arg(long)]
    visibility: f64,
    #[arg(long)]
    shots: u64,
    #[arg(long = "beta")]
    betas: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Counts CSV (`phase_rad,c0,c1,c2,c3[,acquisition_id]`).
    counts: PathBuf,
    /// Estimated visibility, repeatable, or a range a:b:step. Default 0.98.
    #[arg(long = "v-est")]
    v_est: Vec<String>,
    /// Reduce each phase label modulo π and center the prior window on it.
    #[arg(long)]
    fold: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum UncertaintyArg {
    PerShot,
    Posterior,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Below,
    Both,
}

/// Simulation settings as read from a config file.
#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SimulateFile {
    phase_true: Option<f64>,
    v_true: Option<f64>,
    v_est: Option<Vec<f64>>,
    shots: Option<u64>,
    experiments: Option<usize>,
    beta: Option<Vec<f64>>,
    grid_points: Option<usize>,
    domain: Option<(f64, f64)>,
    seed: Option<u64>,
    window: Option<ViolationWindow>,
}

#[derive(Serialize)]
struct ResolvedSimulate<'a> {
    campaign: &'a CampaignConfig,
    v_est: &'a [f64],
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        match err {
            Error::Parse(_) | Error::InfeasibleData { .. } | Error::Io(_) => Failure::Data(err.to_string()),
            _ => Failure::Usage(err.to_string()),
        }
    }
}

fn sweep(values: &[String]) -> Result<Vec<f64>, Failure> {
    let mut out = Vec::new();
    for v in values {
        out.extend(report::parse_sweep(v)?);
    }
    Ok(out)
}

fn domain(common: &Common, file_domain: Option<(f64, f64)>, file_grid: Option<usize>) -> Result<PhaseDomain, Failure> {
    let (lo, hi) = match &common.domain {
        Some(text) => report::parse_interval(text)?,
        None => file_domain.unwrap_or((0.0, std::f64::consts::FRAC_PI_2)),
    };
    let grid = common.grid_points.or(file_grid).unwrap_or(DEFAULT_GRID_POINTS);
    Ok(PhaseDomain::new(lo, hi, grid)?)
}

fn betas(flags: &[f64], file: Option<Vec<f64>>) -> Vec<f64> {
    if !flags.is_empty() {
        flags.to_vec()
    } else {
        file.unwrap_or_else(|| DEFAULT_BETAS.to_vec())
    }
}

fn emit<C: Serialize>(
    command: &str,
    resolved: &C,
    seed: Option<u64>,
    table: &[u8],
    out: Option<&Path>,
) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let mut manifest = RunManifest::new(command, resolved, seed)?;
            report::write_with_manifest(path, table, &mut manifest)?;
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(table)
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Data(e.to_string()))?;
        }
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let file: SimulateFile = match &args.config {
        Some(path) => {
            let reader = File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_reader(reader).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => SimulateFile::default(),
    };
    let v_ests = if !args.v_est.is_empty() {
        sweep(&args.v_est)?
    } else {
        file.v_est.clone().unwrap_or(report::parse_sweep("0.90:1.00:0.01")?)
    };
    let defaults = CampaignConfig::default();
    let mut window = file.window.unwrap_or_default();
    if let Some(sigmas) = args.window_sigmas {
        window.sigmas = sigmas;
    }
    if let Some(u) = args.uncertainty {
        window.uncertainty = match u {
            UncertaintyArg::PerShot => MomentUncertainty::PerShot,
            UncertaintyArg::Posterior => MomentUncertainty::Posterior,
        };
    }
    if let Some(side) = args.side {
        window.side = match side {
            SideArg::Below => WindowSide::Below,
            SideArg::Both => WindowSide::Both,
        };
    }
    let config = CampaignConfig {
        phase_true: args.phase_true.or(file.phase_true).unwrap_or(defaults.phase_true),
        v_true: args.v_true.or(file.v_true).unwrap_or(defaults.v_true),
        v_est: v_ests[0],
        shots: args.shots.or(file.shots).unwrap_or(defaults.shots),
        n_experiments: args.experiments.or(file.experiments).unwrap_or(defaults.n_experiments),
        betas: betas(&args.common.betas, file.beta),
        domain: domain(&args.common, file.domain, file.grid_points)?,
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
        window,
    };
    for &v in &v_ests {
        CampaignConfig { v_est: v, ..config.clone() }.validate()?;
    }
    let rows = report::simulate_table(&config, &v_ests)?;
    let table = report::simulate_csv(&rows)?;
    let resolved = ResolvedSimulate {
        campaign: &config,
        v_est: &v_ests,
    };
    emit("simulate", &resolved, Some(config.seed), &table, args.common.out.as_deref())
}

#[derive(Serialize)]
struct ResolvedBounds<'a> {
    phases: &'a [f64],
    visibility: f64,
    shots: u64,
    betas: &'a [f64],
}

fn bounds(args: BoundsArgs) -> Result<(), Failure> {
    let phases = sweep(&args.phases)?;
    let betas = betas(&args.betas, None);
    let rows = report::bounds_table(&phases, args.visibility, args.shots, &betas)?;
    let table = report::bounds_csv(&rows)?;
    let resolved = ResolvedBounds {
        phases: &phases,
        visibility: args.visibility,
        shots: args.shots,
        betas: &betas,
    };
    emit("bounds", &resolved, None, &table, args.out.as_deref())
}

#[derive(Serialize)]
struct ResolvedAnalyze<'a> {
    counts: &'a Path,
    options: &'a AnalyzeOptions,
}

fn analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let v_ests = if args.v_est.is_empty() {
        vec![0.98]
    } else {
        sweep(&args.v_est)?
    };
    let options = AnalyzeOptions {
        v_ests,
        betas: betas(&args.common.betas, None),
        domain: domain(&args.common, None, None)?,
        fold: args.fold,
    };
    let file = File::open(&args.counts).map_err(|e| Failure::Data(format!("{}: {e}", args.counts.display())))?;
    let records = ingest::parse_counts(io::BufReader::new(file))?;
    let rows = report::analyze_records(&records, &options)?;
    let infeasible = rows
        .iter()
        .filter(|r| r.status == report::RowStatus::Infeasible)
        .count();
    if infeasible > 0 {
        eprintln!("warning: {infeasible} rows infeasible under the assumed visibility");
    }
    let table = report::analyze_csv(&rows)?;
    let resolved = ResolvedAnalyze {
        counts: &args.counts,
        options: &options,
    };
    emit("analyze", &resolved, None, &table, args.common.out.as_deref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Bounds(args) => bounds(args),
        Command::Analyze(args) => analyze(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
