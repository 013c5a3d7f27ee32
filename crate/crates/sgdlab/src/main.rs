use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use sgdlab::experiments::{CliError, ExperimentName, ExperimentSpec, Overrides};
use sgdlab::optimizers::UpdateRule;
use sgdlab::theory::FpKind;
use std::path::PathBuf;
use std::process::ExitCode;

/// Stochastic-optimizer dynamics laboratory.
///
/// Each subcommand reproduces one experiment: seeded Monte-Carlo ensembles of
/// GD/SGD/Adam/AMSGrad on toy landscapes, checked against closed-form theory,
/// with CSV artifacts (and optional SVG plots) plus provenance sidecars.
#[derive(Parser)]
#[command(name = "sgdlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// SGD on the quadratic saddle: histograms, escape stats, theory overlay.
    ConvergeQuadratic(CommonArgs),
    /// Escape probability over an (a, lambda) grid with theory boundaries.
    PhaseDiagram(CommonArgs),
    /// Empirical escape-rate curve with the closed-form overlay.
    EscapeRate(CommonArgs),
    /// Sharp-vs-flat minima selection on the 2-D landscape.
    Sharpflat(CommonArgs),
    /// GD/Adam/AMSGrad comparison at a local maximum.
    AmsgradCompare(CommonArgs),
    /// Learning-rate sweep on the two-layer toy net.
    Toynet(CommonArgs),
    /// Continuous-time stationary density, modes, and critical curvature.
    FpStationary(CommonArgs),
    /// Certify which standard convergence assumptions fail on the toy net.
    Audit(CommonArgs),
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// JSON config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Landscape family: quadratic|quartic|sharpflat|toynet.
    #[arg(long)]
    landscape: Option<String>,
    /// Curvature parameter a.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Secondary landscape parameter b.
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    /// Batch size S (continuous-time theory).
    #[arg(long = "s")]
    batch_size: Option<u32>,
    /// Update rule.
    #[arg(long, value_enum)]
    rule: Option<UpdateRule>,
    /// Learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Momentum coefficient beta1.
    #[arg(long = "b1", alias = "beta1")]
    beta1: Option<f64>,
    /// Preconditioner coefficient beta2.
    #[arg(long = "b2", alias = "beta2")]
    beta2: Option<f64>,
    /// Number of optimization steps (escape-rate: estimation step t_est).
    #[arg(long)]
    steps: Option<u64>,
    /// Independent runs per ensemble.
    #[arg(long)]
    runs: Option<usize>,
    /// Master seed; per-run streams derive from (seed, run index).
    #[arg(long)]
    seed: Option<u64>,
    /// Grid size NxM for sweeps, e.g. 41x41.
    #[arg(long)]
    grid: Option<String>,
    /// Output directory (default out/<command>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also emit SVG plots.
    #[arg(long)]
    svg: bool,
    /// Additive-noise strength sigma (fp-stationary).
    #[arg(long)]
    sigma: Option<f64>,
    /// Stationary-density kind (fp-stationary).
    #[arg(long, value_enum)]
    kind: Option<FpKind>,
    /// Escape threshold / classification radius / audit fd step, per command.
    #[arg(long)]
    tau: Option<f64>,
    /// Box constraint "lo,hi" applied to every coordinate.
    #[arg(long = "box", allow_hyphen_values = true)]
    box_bounds: Option<String>,
}

/// JSON config file mirror of the flags; any subset of keys may appear.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    landscape: Option<String>,
    a: Option<f64>,
    b: Option<f64>,
    #[serde(rename = "S")]
    batch_size: Option<u32>,
    rule: Option<UpdateRule>,
    lr: Option<f64>,
    b1: Option<f64>,
    b2: Option<f64>,
    steps: Option<u64>,
    runs: Option<usize>,
    seed: Option<u64>,
    grid: Option<String>,
    out: Option<PathBuf>,
    svg: Option<bool>,
    sigma: Option<f64>,
    kind: Option<String>,
    tau: Option<f64>,
    #[serde(rename = "box")]
    box_bounds: Option<String>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), CliError> {
    let (n, m) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| CliError::Config(format!("grid must look like 41x41, got {s}")))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("bad grid dimension {t}")))
    };
    Ok((parse(n)?, parse(m)?))
}

fn parse_box(s: &str) -> Result<(f64, f64), CliError> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| CliError::Config(format!("box must look like -1,1, got {s}")))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Config(format!("bad box bound {t}")))
    };
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo > hi {
        return Err(CliError::Config(format!("box lo {lo} exceeds hi {hi}")));
    }
    Ok((lo, hi))
}

fn parse_kind(s: &str) -> Result<FpKind, CliError> {
    match s {
        "quadratic" => Ok(FpKind::Quadratic),
        "quartic" => Ok(FpKind::Quartic),
        "additive" => Ok(FpKind::Additive),
        other => Err(CliError::Config(format!(
            "kind must be quadratic|quartic|additive, got {other}"
        ))),
    }
}

fn merge(args: CommonArgs) -> Result<Overrides, CliError> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };

    let grid = match args.grid.as_deref().or(file.grid.as_deref()) {
        Some(g) => Some(parse_grid(g)?),
        None => None,
    };
    let box_bounds = match args.box_bounds.as_deref().or(file.box_bounds.as_deref()) {
        Some(b) => Some(parse_box(b)?),
        None => None,
    };
    let kind = match args.kind {
        Some(k) => Some(k),
        None => file.kind.as_deref().map(parse_kind).transpose()?,
    };

    Ok(Overrides {
        landscape: args.landscape.or(file.landscape),
        a: args.a.or(file.a),
        b: args.b.or(file.b),
        batch_size: args.batch_size.or(file.batch_size),
        rule: args.rule.or(file.rule),
        lr: args.lr.or(file.lr),
        beta1: args.beta1.or(file.b1),
        beta2: args.beta2.or(file.b2),
        steps: args.steps.or(file.steps),
        runs: args.runs.or(file.runs),
        seed: args.seed.or(file.seed),
        grid,
        out: args.out.or(file.out),
        svg: args.svg || file.svg.unwrap_or(false),
        sigma: args.sigma.or(file.sigma),
        kind,
        tau: args.tau.or(file.tau),
        box_bounds,
    })
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    let (name, args) = match cli.command {
        Command::ConvergeQuadratic(a) => (ExperimentName::ConvergeQuadratic, a),
        Command::PhaseDiagram(a) => (ExperimentName::PhaseDiagram, a),
        Command::EscapeRate(a) => (ExperimentName::EscapeRate, a),
        Command::Sharpflat(a) => (ExperimentName::SharpFlat, a),
        Command::AmsgradCompare(a) => (ExperimentName::AmsgradCompare, a),
        Command::Toynet(a) => (ExperimentName::ToyNet, a),
        Command::FpStationary(a) => (ExperimentName::FpStationary, a),
        Command::Audit(a) => (ExperimentName::Audit, a),
    };
    let spec = ExperimentSpec {
        name,
        overrides: merge(args)?,
    };
    spec.run()
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
