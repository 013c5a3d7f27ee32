//! Named experiment drivers behind the CLI: each wires landscapes ×
//! optimizers × ensemble × theory and writes CSV artifacts (plus optional
//! SVG) under an output directory. Every artifact gets a provenance sidecar;
//! re-running with the same seed overwrites byte-identical files.

use crate::audit::{full_audit, DEFAULT_FD_STEP};
use crate::ensemble::{
    classify_terminal, escape_probability, escape_rate_estimate, histogram, mix_seed, phase_sweep,
    run_ensemble_with_spec, EnsembleConfig, EnsembleError, PhaseFamily, RunStatus,
};
use crate::landscapes::LandscapeSpec;
use crate::optimizers::{BoxConstraint, HyperParams, UpdateRule};
use crate::report::{
    density2d_rows, fmt, histogram_rows, provenance_sidecar, write_boundary_csv,
    write_classification_csv, write_csv, write_phase_grid_csv, write_runs_csv,
    write_snapshots_csv,
};
use crate::stats;
use crate::svg::{heatmap, histogram_chart, line_chart, Series};
use crate::theory::{
    continuous_escape_boundary, escape_rate_curve, fp_critical_a, fp_default_grid, fp_mode,
    fp_stationary_density, log_contraction, optimal_escape, sharpflat_constants, trapped_interval,
    FpDensity, FpKind, FpStationaryParams, TheoryError,
};
use serde::Serialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<EnsembleError> for CliError {
    fn from(e: EnsembleError) -> Self {
        match e {
            EnsembleError::InvalidConfig(msg) => CliError::Config(msg),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<TheoryError> for CliError {
    fn from(e: TheoryError) -> Self {
        match e {
            TheoryError::InvalidParameter(msg) => CliError::Config(msg),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

/// Optional settings merged from the JSON config file and CLI flags (flags
/// win); each experiment fills what is left with its own defaults.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub landscape: Option<String>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub batch_size: Option<u32>,
    pub rule: Option<UpdateRule>,
    pub lr: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub steps: Option<u64>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub grid: Option<(usize, usize)>,
    pub out: Option<PathBuf>,
    pub svg: bool,
    pub sigma: Option<f64>,
    pub kind: Option<FpKind>,
    pub tau: Option<f64>,
    pub box_bounds: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentName {
    ConvergeQuadratic,
    PhaseDiagram,
    EscapeRate,
    SharpFlat,
    AmsgradCompare,
    ToyNet,
    FpStationary,
    Audit,
}

impl ExperimentName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentName::ConvergeQuadratic => "converge-quadratic",
            ExperimentName::PhaseDiagram => "phase-diagram",
            ExperimentName::EscapeRate => "escape-rate",
            ExperimentName::SharpFlat => "sharpflat",
            ExperimentName::AmsgradCompare => "amsgrad-compare",
            ExperimentName::ToyNet => "toynet",
            ExperimentName::FpStationary => "fp-stationary",
            ExperimentName::Audit => "audit",
        }
    }
}

/// A fully named experiment: registered command plus its overrides.
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub overrides: Overrides,
}

impl ExperimentSpec {
    pub fn run(&self) -> Result<(), CliError> {
        match self.name {
            ExperimentName::ConvergeQuadratic => cmd_converge_quadratic(&self.overrides),
            ExperimentName::PhaseDiagram => cmd_phase_diagram(&self.overrides),
            ExperimentName::EscapeRate => cmd_escape_rate(&self.overrides),
            ExperimentName::SharpFlat => cmd_sharpflat(&self.overrides),
            ExperimentName::AmsgradCompare => cmd_amsgrad_compare(&self.overrides),
            ExperimentName::ToyNet => cmd_toynet(&self.overrides),
            ExperimentName::FpStationary => cmd_fp_stationary(&self.overrides),
            ExperimentName::Audit => cmd_audit(&self.overrides),
        }
    }
}

fn out_dir(ov: &Overrides, command: &str) -> Result<PathBuf, CliError> {
    let dir = ov
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(command.replace('-', "_")));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_svg(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// converge-quadratic
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct ConvergeQuadraticConfig {
    landscape: LandscapeSpec,
    rule: UpdateRule,
    lr: f64,
    beta1: f64,
    beta2: f64,
    box_bounds: Option<(f64, f64)>,
    runs: usize,
    steps: u64,
    seed: u64,
    snapshots: Vec<u64>,
    tau: f64,
    bins: usize,
    range: (f64, f64),
}

/// SGD (or any rule via --rule) on the 1-D saddle landscapes: parameter
/// histograms across snapshots, escape statistics, and the trapped-interval
/// overlay. `--landscape quartic` gives the fourth-order variant.
pub fn cmd_converge_quadratic(ov: &Overrides) -> Result<(), CliError> {
    let a = ov.a.unwrap_or(-1.0);
    let landscape = match ov.landscape.as_deref() {
        None | Some("quadratic") => LandscapeSpec::Quadratic { a },
        Some("quartic") => LandscapeSpec::Quartic { a },
        Some(other) => {
            return Err(CliError::Config(format!(
                "converge-quadratic supports quadratic|quartic, got {other}"
            )))
        }
    };
    let rule = ov.rule.unwrap_or(UpdateRule::Sgd);
    let lr = ov.lr.unwrap_or(0.8);
    let hp = match rule {
        UpdateRule::Gd => HyperParams::gd(lr),
        UpdateRule::Sgd => HyperParams::sgd(lr),
        UpdateRule::Adam => HyperParams::adam(lr, ov.beta1.unwrap_or(0.9), ov.beta2.unwrap_or(0.999)),
        UpdateRule::AmsGrad => {
            HyperParams::amsgrad(lr, ov.beta1.unwrap_or(0.9), ov.beta2.unwrap_or(0.999))
        }
    };
    let default_tau = match landscape {
        LandscapeSpec::Quartic { a } => PhaseFamily::Quartic.default_tau(a),
        _ => 10.0,
    };
    let cfg = ConvergeQuadraticConfig {
        landscape: landscape.clone(),
        rule,
        lr,
        beta1: hp.beta1,
        beta2: hp.beta2,
        box_bounds: ov.box_bounds,
        runs: ov.runs.unwrap_or(2000),
        steps: ov.steps.unwrap_or(1000),
        seed: ov.seed.unwrap_or(DEFAULT_SEED),
        snapshots: vec![],
        tau: ov.tau.unwrap_or(default_tau),
        bins: 81,
        range: (-4.0, 4.0),
    };
    let snapshots: Vec<u64> = [0u64, 10, 100, 1000]
        .iter()
        .copied()
        .filter(|&s| s <= cfg.steps)
        .chain((![0u64, 10, 100, 1000].contains(&cfg.steps)).then_some(cfg.steps))
        .collect();
    let cfg = ConvergeQuadraticConfig { snapshots: snapshots.clone(), ..cfg };
    let dir = out_dir(ov, "converge-quadratic")?;

    let spec = landscape;
    let obj = spec.build();
    let box_ = match cfg.box_bounds {
        Some((lo, hi)) => BoxConstraint::new(vec![lo; 1], vec![hi; 1]),
        None => BoxConstraint::disabled(1),
    };
    let ecfg = EnsembleConfig::new(cfg.runs, cfg.steps, spec.default_init(), cfg.seed)
        .with_snapshots(snapshots.clone());
    let result = run_ensemble_with_spec(obj.as_ref(), &hp, &box_, &ecfg, Some(spec.clone()))?;

    let escape = escape_probability(&result, cfg.tau);
    let small = result
        .runs
        .iter()
        .filter(|r| r.terminal_w[0].abs() < 1e-6)
        .count() as f64
        / cfg.runs as f64;
    let lc = log_contraction(obj.noise(), cfg.lr);
    let iv = trapped_interval(a);

    let mut hist_rows = Vec::new();
    let mut series = Vec::new();
    for &s in &snapshots {
        let h = histogram(&result, s, cfg.bins, cfg.range)?;
        series.push(Series {
            label: format!("step {s}"),
            points: h
                .counts
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    let (lo, hi) = h.bin_edges(i);
                    (0.5 * (lo + hi), c as f64)
                })
                .collect(),
        });
        hist_rows.extend(histogram_rows(s, &h));
    }

    let runs_path = dir.join("runs.csv");
    write_runs_csv(&runs_path, &result)?;
    let snaps_path = dir.join("snapshots.csv");
    write_snapshots_csv(&snaps_path, &result)?;
    let hist_path = dir.join("histograms.csv");
    write_csv(&hist_path, &["step", "bin_lo", "bin_hi", "count"], hist_rows)?;
    let stats_path = dir.join("escape_stats.csv");
    write_csv(
        &stats_path,
        &["tau", "escape_probability", "fraction_below_1e-6", "n_absorbed_zero", "n_diverged"],
        [vec![
            fmt(cfg.tau),
            fmt(escape),
            fmt(small),
            result
                .runs
                .iter()
                .filter(|r| r.status == RunStatus::AbsorbedZero)
                .count()
                .to_string(),
            result
                .runs
                .iter()
                .filter(|r| r.status == RunStatus::Diverged)
                .count()
                .to_string(),
        ]],
    )?;
    let theory_path = dir.join("theory.csv");
    write_csv(
        &theory_path,
        &["a", "lambda", "mu", "s2", "trapped_lambda_lo", "trapped_lambda_hi"],
        [vec![
            fmt(a),
            fmt(cfg.lr),
            fmt(lc.mu),
            fmt(lc.s2),
            fmt(iv.lambda_lo),
            fmt(iv.lambda_hi),
        ]],
    )?;
    for p in [&runs_path, &snaps_path, &hist_path, &stats_path, &theory_path] {
        provenance_sidecar(p, "converge-quadratic", cfg.seed, &cfg)?;
    }
    if ov.svg {
        write_svg(
            &dir.join("histograms.svg"),
            &histogram_chart("parameter distribution across steps", "w", &series),
        )?;
    }

    println!(
        "converge-quadratic: landscape={} a={} rule={} lambda={} runs={} steps={} seed={}",
        obj.name(),
        a,
        cfg.rule.as_str(),
        cfg.lr,
        cfg.runs,
        cfg.steps,
        cfg.seed
    );
    println!("  escape_probability(tau={}) = {:.4}", cfg.tau, escape);
    println!("  fraction |w_T| < 1e-6     = {:.4}", small);
    println!(
        "  theory: mu = {:.6}, trapped interval = ({:.6}, {:.6})",
        lc.mu, iv.lambda_lo, iv.lambda_hi
    );
    println!("  artifacts in {}", dir.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// phase-diagram
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct PhaseDiagramConfig {
    family: PhaseFamily,
    a_range: (f64, f64),
    lambda_range: (f64, f64),
    grid: (usize, usize),
    runs: usize,
    steps: u64,
    seed: u64,
    batch_size: u32,
    tau: Option<f64>,
}

/// Escape probability over the (a, λ) plane with the discrete and
/// continuous-time boundaries.
pub fn cmd_phase_diagram(ov: &Overrides) -> Result<(), CliError> {
    let family = match ov.landscape.as_deref() {
        None | Some("quadratic") => PhaseFamily::Quadratic,
        Some("quartic") => PhaseFamily::Quartic,
        Some(other) => {
            return Err(CliError::Config(format!(
                "phase-diagram supports quadratic|quartic, got {other}"
            )))
        }
    };
    let cfg = PhaseDiagramConfig {
        family,
        a_range: (-2.0, 2.0),
        lambda_range: (0.02, 1.5),
        grid: ov.grid.unwrap_or((41, 41)),
        runs: ov.runs.unwrap_or(500),
        steps: ov.steps.unwrap_or(1000),
        seed: ov.seed.unwrap_or(DEFAULT_SEED),
        batch_size: ov.batch_size.unwrap_or(1),
        tau: ov.tau,
    };
    let dir = out_dir(ov, &format!("phase-diagram-{}", family_name(family)))?;

    let ecfg = EnsembleConfig::new(cfg.runs, cfg.steps, vec![(-1.0, 1.0)], cfg.seed);
    let grid = phase_sweep(
        cfg.family,
        cfg.a_range,
        cfg.lambda_range,
        cfg.grid,
        &ecfg,
        cfg.tau,
    )?;

    let grid_path = dir.join("phase_grid.csv");
    write_phase_grid_csv(&grid_path, &grid)?;
    let boundary_path = dir.join("boundary_discrete.csv");
    write_boundary_csv(&boundary_path, &grid)?;
    let cont_path = dir.join("boundary_continuous.csv");
    write_csv(
        &cont_path,
        &["a", "lambda"],
        grid.a_values
            .iter()
            .filter(|&&a| a < 0.0)
            .map(|&a| vec![fmt(a), fmt(continuous_escape_boundary(a, cfg.batch_size))]),
    )?;
    for p in [&grid_path, &boundary_path, &cont_path] {
        provenance_sidecar(p, "phase-diagram", cfg.seed, &cfg)?;
    }
    if ov.svg {
        write_svg(
            &dir.join("phase.svg"),
            &heatmap(
                "escape probability",
                "a",
                "lambda",
                &grid.a_values,
                &grid.lambda_values,
                &grid.escape_probability,
            ),
        )?;
    }

    println!(
        "phase-diagram ({}): {}x{} grid, {} runs/cell, {} steps, seed={}",
        family_name(cfg.family),
        cfg.grid.0,
        cfg.grid.1,
        cfg.runs,
        cfg.steps,
        cfg.seed
    );
    println!("  artifacts in {}", dir.display());
    Ok(())
}

fn family_name(f: PhaseFamily) -> &'static str {
    match f {
        PhaseFamily::Quadratic => "quadratic",
        PhaseFamily::Quartic => "quartic",
    }
}

// ---------------------------------------------------------------------------
// escape-rate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct EscapeRateConfig {
    a: f64,
    runs: usize,
    t_est: u64,
    lambdas: Vec<f64>,
    trace_lambda: f64,
    trace_steps: u64,
    seed: u64,
}

/// Empirical escape-rate curve γ̂(λ) with the closed-form overlay, plus the
/// per-step stability trace at λ*.
pub fn cmd_escape_rate(ov: &Overrides) -> Result<(), CliError> {
    let a = ov.a.unwrap_or(-1.0);
    let (lambda_star, gamma_star) = optimal_escape(a);
    let cfg = EscapeRateConfig {
        a,
        runs: ov.runs.unwrap_or(2000),
        t_est: ov.steps.unwrap_or(100),
        lambdas: (1..=19).map(|k| 0.05 * k as f64).collect(),
        trace_lambda: lambda_star,
        trace_steps: 200,
        seed: ov.seed.unwrap_or(DEFAULT_SEED),
    };
    let dir = out_dir(ov, "escape-rate")?;
    let spec = LandscapeSpec::Quadratic { a: cfg.a };
    let obj = spec.build();

    let mut curve_rows = Vec::new();
    let mut emp = Vec::new();
    let mut theo = Vec::new();
    for (k, &lambda) in cfg.lambdas.iter().enumerate() {
        let ecfg = EnsembleConfig::new(
            cfg.runs,
            cfg.t_est,
            spec.default_init(),
            mix_seed(cfg.seed, k as u64),
        )
        .with_snapshots(vec![cfg.t_est])
        .with_divergence_cap(1e300);
        let result = run_ensemble_with_spec(
            obj.as_ref(),
            &HyperParams::sgd(lambda),
            &BoxConstraint::disabled(1),
            &ecfg,
            Some(spec.clone()),
        )?;
        let est = escape_rate_estimate(&result, cfg.t_est)?;
        let gamma_theory = escape_rate_curve(cfg.a, lambda).map_err(CliError::from)?;
        emp.push((lambda, est.gamma_hat));
        theo.push((lambda, gamma_theory));
        curve_rows.push(vec![
            fmt(lambda),
            fmt(est.gamma_hat),
            fmt(est.stderr),
            fmt(gamma_theory),
            est.n_used.to_string(),
            est.n_zero.to_string(),
            est.n_diverged.to_string(),
        ]);
    }

    // Stability trace at lambda*: gamma estimated at every step up to
    // trace_steps; the estimate settles within a few dozen steps.
    let trace_snapshots: Vec<u64> = (1..=cfg.trace_steps).collect();
    let tcfg = EnsembleConfig::new(
        cfg.runs,
        cfg.trace_steps,
        spec.default_init(),
        mix_seed(cfg.seed, 10_001),
    )
    .with_snapshots(trace_snapshots.clone())
    .with_divergence_cap(1e300);
    let trace_result = run_ensemble_with_spec(
        obj.as_ref(),
        &HyperParams::sgd(cfg.trace_lambda),
        &BoxConstraint::disabled(1),
        &tcfg,
        Some(spec.clone()),
    )?;
    let mut trace_rows = Vec::new();
    for &t in &trace_snapshots {
        let est = escape_rate_estimate(&trace_result, t)?;
        trace_rows.push(vec![t.to_string(), fmt(est.gamma_hat), fmt(est.stderr)]);
    }

    let curve_path = dir.join("gamma_curve.csv");
    write_csv(
        &curve_path,
        &["lambda", "gamma_hat", "stderr", "gamma_theory", "n_used", "n_zero", "n_diverged"],
        curve_rows,
    )?;
    let trace_path = dir.join("gamma_trace.csv");
    write_csv(&trace_path, &["step", "gamma_hat", "stderr"], trace_rows)?;
    for p in [&curve_path, &trace_path] {
        provenance_sidecar(p, "escape-rate", cfg.seed, &cfg)?;
    }
    if ov.svg {
        write_svg(
            &dir.join("gamma.svg"),
            &line_chart(
                "escape rate vs learning rate",
                "lambda",
                "gamma",
                &[
                    Series { label: "empirical".into(), points: emp.clone() },
                    Series { label: "theory".into(), points: theo },
                ],
            ),
        )?;
    }

    let argmax = emp
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    println!(
        "escape-rate: a={} runs={} t_est={} seed={}",
        cfg.a, cfg.runs, cfg.t_est, cfg.seed
    );
    println!(
        "  lambda* = {:.4}, gamma* = {:.6}; empirical argmax at lambda = {:.2} (gamma_hat = {:.6})",
        lambda_star, gamma_star, argmax.0, argmax.1
    );
    println!("  artifacts in {}", dir.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// sharpflat
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct SharpFlatConfig {
    a: f64,
    b: f64,
    lr: f64,
    runs: usize,
    steps: u64,
    seed: u64,
    snapshots: Vec<u64>,
    radius: f64,
    converges: bool,
}

/// Sharp-vs-flat minima selection: 2-D densities across snapshots and
/// terminal-basin classification.
pub fn cmd_sharpflat(ov: &Overrides) -> Result<(), CliError> {
    let lr = ov.lr.unwrap_or(0.05);
    let (b_default, converges) = sharpflat_constants(lr);
    if !converges {
        eprintln!(
            "warning: lambda = {lr} exceeds the convergence boundary (1+sqrt(6))/20 ~= 0.17247; \
             the sharp-minima selection guarantee does not apply"
        );
    }
    let b = ov.b.unwrap_or(b_default);
    if b <= 0.0 {
        return Err(CliError::Config(format!(
            "sharpflat requires b > 0 (lambda = {lr} gives b = {b})"
        )));
    }
    let steps = ov.steps.unwrap_or(10_000);
    let cfg = SharpFlatConfig {
        a: ov.a.unwrap_or(1.0),
        b,
        lr,
        runs: ov.runs.unwrap_or(2000),
        steps,
        seed: ov.seed.unwrap_or(DEFAULT_SEED),
        snapshots: {
            let mut s: Vec<u64> = [0u64, 2, steps].iter().copied().filter(|&v| v <= steps).collect();
            s.dedup();
            s
        },
        radius: ov.tau.unwrap_or(0.05),
        converges,
    };
    let dir = out_dir(ov, "sharpflat")?;

    let spec = LandscapeSpec::SharpFlat { a: cfg.a, b: cfg.b };
    let obj = spec.build();
    let ecfg = EnsembleConfig::new(cfg.runs, cfg.steps, spec.default_init(), cfg.seed)
        .with_snapshots(cfg.snapshots.clone());
    let result = run_ensemble_with_spec(
        obj.as_ref(),
        &HyperParams::sgd(cfg.lr),
        &BoxConstraint::symmetric(2, 1.0),
        &ecfg,
        Some(spec.clone()),
    )?;

    let catalog = obj.critical_point_catalog();
    let classification = classify_terminal(&result, &catalog, cfg.radius);

    let class_path = dir.join("classification.csv");
    write_classification_csv(&class_path, &classification)?;
    let runs_path = dir.join("runs.csv");
    write_runs_csv(&runs_path, &result)?;
    let mut density_paths = Vec::new();
    for (k, &s) in cfg.snapshots.iter().enumerate() {
        let p = dir.join(format!("density_step{s}.csv"));
        write_csv(&p, &["w1", "w2", "count"], density2d_rows(&result, k, 81, -1.5, 1.5))?;
        density_paths.push(p);
    }
    for p in density_paths.iter().chain([&class_path, &runs_path]) {
        provenance_sidecar(p, "sharpflat", cfg.seed, &cfg)?;
    }
    if ov.svg {
        let pts: Vec<(f64, f64)> = result
            .snapshots
            .iter()
            .map(|s| (s.last().unwrap()[0], s.last().unwrap()[1]))
            .collect();
        write_svg(
            &dir.join("terminal.svg"),
            &line_chart(
                "terminal parameters",
                "w1",
                "w2",
                &[Series { label: "runs".into(), points: pts }],
            ),
        )?;
    }

    let sharp: usize = classification
        .counts
        .iter()
        .filter(|(l, _)| l.starts_with("sharp"))
        .map(|(_, n)| n)
        .sum();
    let flat: usize = classification
        .counts
        .iter()
        .filter(|(l, _)| l.starts_with("flat"))
        .map(|(_, n)| n)
        .sum();
    println!(
        "sharpflat: a={} b={} lambda={} runs={} steps={} seed={}",
        cfg.a, cfg.b, cfg.lr, cfg.runs, cfg.steps, cfg.seed
    );
    println!(
        "  at sharp minima: {sharp}/{} ({:.2}%), at flat minima: {flat}",
        cfg.runs,
        100.0 * sharp as f64 / cfg.runs as f64
    );
    println!("  artifacts in {}", dir.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// amsgrad-compare
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct AmsgradCompareConfig {
    a: f64,
    lr: f64,
    beta2: f64,
    gd_lr: f64,
    runs: usize,
    steps: u64,
    seed: u64,
    log_every: u64,
}

/// GD vs Adam vs AMSGrad on the quadratic maximum with a box constraint:
/// mean |w| trajectories with standard-error bands.
pub fn cmd_amsgrad_compare(ov: &Overrides) -> Result<(), CliError> {
    let steps = ov.steps.unwrap_or(50_000);
    let cfg = AmsgradCompareConfig {
        a: ov.a.unwrap_or(-0.1),
        lr: ov.lr.unwrap_or(0.2),
        beta2: ov.beta2.unwrap_or(0.999),
        gd_lr: 0.01,
        runs: ov.runs.unwrap_or(2000),
        steps,
        seed: ov.seed.unwrap_or(DEFAULT_SEED),
        log_every: (steps / 100).max(1),
    };
    let dir = out_dir(ov, "amsgrad-compare")?;

    let spec = LandscapeSpec::Quadratic { a: cfg.a };
    let obj = spec.build();
    let snapshots: Vec<u64> = (0..=cfg.steps).step_by(cfg.log_every as usize).collect();
    let box_ = BoxConstraint::symmetric(1, 1.0);

    let configs: Vec<(String, HyperParams)> = vec![
        ("gd".into(), HyperParams::gd(cfg.gd_lr)),
        ("adam-b1-0".into(), HyperParams::adam(cfg.lr, 0.0, cfg.beta2)),
        ("adam-b1-0.9".into(), HyperParams::adam(cfg.lr, 0.9, cfg.beta2)),
        ("amsgrad-b1-0".into(), HyperParams::amsgrad(cfg.lr, 0.0, cfg.beta2)),
        ("amsgrad-b1-0.9".into(), HyperParams::amsgrad(cfg.lr, 0.9, cfg.beta2)),
    ];

    let mut rows = Vec::new();
    let mut series = Vec::new();
    let mut terminal_summary = Vec::new();
    for (k, (label, hp)) in configs.iter().enumerate() {
        let ecfg = EnsembleConfig::new(
            cfg.runs,
            cfg.steps,
            spec.default_init(),
            mix_seed(cfg.seed, k as u64),
        )
        .with_snapshots(snapshots.clone());
        let result = run_ensemble_with_spec(obj.as_ref(), hp, &box_, &ecfg, Some(spec.clone()))?;
        let mut pts = Vec::new();
        for (i, &s) in snapshots.iter().enumerate() {
            let abs_w: Vec<f64> = result.snapshots.iter().map(|sn| sn[i][0].abs()).collect();
            let m = stats::mean(&abs_w);
            rows.push(vec![
                label.clone(),
                hp.rule.as_str().to_string(),
                fmt(hp.beta1),
                s.to_string(),
                fmt(m),
                fmt(stats::stderr_of_mean(&abs_w)),
            ]);
            pts.push((s as f64, m));
        }
        terminal_summary.push((label.clone(), pts.last().unwrap().1));
        series.push(Series { label: label.clone(), points: pts });
    }

    let path = dir.join("mean_abs_w.csv");
    write_csv(
        &path,
        &["config", "rule", "beta1", "step", "mean_abs_w", "stderr"],
        rows,
    )?;
    provenance_sidecar(&path, "amsgrad-compare", cfg.seed, &cfg)?;
    if ov.svg {
        write_svg(
            &dir.join("mean_abs_w.svg"),
            &line_chart("distance to the maximum", "step", "mean |w|", &series),
        )?;
    }

    println!(
        "amsgrad-compare: a={} lambda={} beta2={} runs={} steps={} seed={}",
        cfg.a, cfg.lr, cfg.beta2, cfg.runs, cfg.steps, cfg.seed
    );
    for (label, m) in terminal_summary {
        println!("  {label:<16} mean |w_T| = {m:.6}");
    }
    println!("  artifacts in {}", dir.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// toynet
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct ToyNetConfig {
    lambdas: Vec<f64>,
    runs: usize,
    steps: u64,
    seed: u64,
    density_lambdas: Vec<f64>,
}

/// Learning-rate sweep on the toy net: equilibrium mean loss, divergence
/// fraction, and terminal densities at a small and a large learning rate.
pub fn cmd_toynet(ov: &Overrides) -> Result<(), CliError> {
    let mut lambdas = vec![0.001];
    lambdas.extend((1..=30).map(|k| 0.005 * k as f64));
    let cfg = ToyNetConfig {
        lambdas,
        runs: ov.runs.unwrap_or(1000),
        steps: ov.steps.unwrap_or(10_000),
        seed: ov.seed.unwrap_or(DEFAULT_SEED),
        density_lambdas: vec![0.001, 0.1],
    };
    let dir = out_dir(ov, "toynet")?;

    let spec = LandscapeSpec::ToyNet;
    let obj = spec.build();

    let mut rows = Vec::new();
    let mut loss_points = Vec::new();
    let mut div_points = Vec::new();
    for (k, &lambda) in cfg.lambdas.iter().enumerate() {
        let ecfg = EnsembleConfig::new(
            cfg.runs,
            cfg.steps,
            spec.default_init(),
            mix_seed(cfg.seed, k as u64),
        )
        .with_snapshots(vec![cfg.steps]);
        let result = run_ensemble_with_spec(
            obj.as_ref(),
            &HyperParams::sgd(lambda),
            &BoxConstraint::disabled(2),
            &ecfg,
            Some(spec.clone()),
        )?;
        let losses: Vec<f64> = result
            .runs
            .iter()
            .filter(|r| r.status != RunStatus::Diverged)
            .map(|r| obj.mean_loss(&r.terminal_w))
            .collect();
        let div_frac = result
            .runs
            .iter()
            .filter(|r| r.status == RunStatus::Diverged)
            .count() as f64
            / cfg.runs as f64;
        let (mean_loss, se) = if losses.is_empty() {
            (f64::NAN, f64::NAN)
        } else if losses.len() == 1 {
            (losses[0], f64::NAN)
        } else {
            (stats::mean(&losses), stats::stderr_of_mean(&losses))
        };
        rows.push(vec![
            fmt(lambda),
            fmt(mean_loss),
            fmt(se),
            fmt(div_frac),
            losses.len().to_string(),
        ]);
        loss_points.push((lambda, mean_loss));
        div_points.push((lambda, div_frac));

        if cfg
            .density_lambdas
            .iter()
            .any(|&dl| (dl - lambda).abs() < 1e-12)
        {
            let p = dir.join(format!("density_lr{lambda}.csv"));
            write_csv(&p, &["w1", "w2", "count"], density2d_rows(&result, 0, 81, -1.5, 1.5))?;
            provenance_sidecar(&p, "toynet", cfg.seed, &cfg)?;
        }
    }

    let sweep_path = dir.join("loss_vs_lr.csv");
    write_csv(
        &sweep_path,
        &["lambda", "mean_terminal_loss", "stderr", "divergence_fraction", "n_converged"],
        rows,
    )?;
    provenance_sidecar(&sweep_path, "toynet", cfg.seed, &cfg)?;
    if ov.svg {
        write_svg(
            &dir.join("loss_vs_lr.svg"),
            &line_chart(
                "equilibrium loss vs learning rate",
                "lambda",
                "mean loss / divergence fraction",
                &[
                    Series { label: "mean loss".into(), points: loss_points.clone() },
                    Series { label: "divergence fraction".into(), points: div_points.clone() },
                ],
            ),
        )?;
    }

    // Locate the divergence onset: first lambda whose fraction crosses 0.5.
    let onset = div_points.iter().find(|(_, f)| *f > 0.5).map(|&(l, _)| l);
    println!(
        "toynet: {} lambdas in [{}, {}], runs={} steps={} seed={}",
        cfg.lambdas.len(),
        cfg.lambdas.first().unwrap(),
        cfg.lambdas.last().unwrap(),
        cfg.runs,
        cfg.steps,
        cfg.seed
    );
    if let Some((l, m)) = loss_points.first() {
        println!("  mean loss at lambda={l}: {m:.4}");
    }
    if let Some(onset) = onset {
        println!("  divergence fraction first exceeds 0.5 at lambda = {onset}");
    }
    println!("  artifacts in {}", dir.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// fp-stationary
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct FpStationaryConfig {
    kind: FpKind,
    params: FpStationaryParams,
}

#[derive(Debug, Clone, Serialize)]
struct FpReport {
    kind: FpKind,
    params: FpStationaryParams,
    critical_a: f64,
    delta_at_zero: bool,
    modes: Vec<f64>,
    grid_argmax: Option<f64>,
}

/// Continuous-time stationary density with mode markers and the critical-a
/// report.
pub fn cmd_fp_stationary(ov: &Overrides) -> Result<(), CliError> {
    let cfg = FpStationaryConfig {
        kind: ov.kind.unwrap_or(FpKind::Additive),
        params: FpStationaryParams {
            a: ov.a.unwrap_or(-1.0),
            b: ov.b.unwrap_or(0.0),
            sigma: ov.sigma.unwrap_or(0.1),
            lambda: ov.lr.unwrap_or(0.8),
            batch_size: ov.batch_size.unwrap_or(1),
        },
    };
    let dir = out_dir(ov, "fp-stationary")?;
    let seed = ov.seed.unwrap_or(DEFAULT_SEED);

    let grid = fp_default_grid();
    let density = fp_stationary_density(&cfg.params, cfg.kind, &grid, true)?;

    let critical_a = fp_critical_a(cfg.params.lambda, cfg.params.batch_size);
    let modes = if cfg.params.b > 0.0 {
        fp_mode(&cfg.params)?
    } else {
        Vec::new()
    };

    let (delta, grid_argmax) = match &density {
        FpDensity::DeltaAtZero => (true, None),
        FpDensity::Grid { w, p } => {
            let argmax = (0..w.len()).max_by(|&i, &j| p[i].total_cmp(&p[j])).unwrap();
            let density_path = dir.join("density.csv");
            write_csv(
                &density_path,
                &["w", "p"],
                w.iter().zip(p).map(|(&x, &d)| vec![fmt(x), fmt(d)]),
            )?;
            provenance_sidecar(&density_path, "fp-stationary", seed, &cfg)?;
            if ov.svg {
                write_svg(
                    &dir.join("density.svg"),
                    &line_chart(
                        "stationary density",
                        "w",
                        "p(w)",
                        &[Series {
                            label: "density".into(),
                            points: w.iter().copied().zip(p.iter().copied()).collect(),
                        }],
                    ),
                )?;
            }
            (false, Some(w[argmax]))
        }
    };

    let modes_path = dir.join("modes.csv");
    write_csv(
        &modes_path,
        &["mode"],
        modes.iter().map(|&m| vec![fmt(m)]),
    )?;
    provenance_sidecar(&modes_path, "fp-stationary", seed, &cfg)?;

    let report = FpReport {
        kind: cfg.kind,
        params: cfg.params,
        critical_a,
        delta_at_zero: delta,
        modes: modes.clone(),
        grid_argmax,
    };
    let report_path = dir.join("report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)? + "\n")?;

    println!(
        "fp-stationary: kind={:?} a={} b={} sigma={} lambda={} S={}",
        cfg.kind,
        cfg.params.a,
        cfg.params.b,
        cfg.params.sigma,
        cfg.params.lambda,
        cfg.params.batch_size
    );
    println!("  critical a = {critical_a}");
    if delta {
        println!("  absorbing phase: density is a delta at w = 0 (flagged, not rasterized)");
    } else if let Some(am) = grid_argmax {
        println!("  grid argmax = {am}; closed-form modes = {modes:?}");
    }
    println!("  artifacts in {}", dir.display());
    Ok(())
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// audit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct AuditConfig {
    fd_step: f64,
}

/// Assumption audit on the toy net (plus convex-quadratic controls);
/// human-readable text and machine-readable JSON.
pub fn cmd_audit(ov: &Overrides) -> Result<(), CliError> {
    let cfg = AuditConfig {
        fd_step: ov.tau.unwrap_or(DEFAULT_FD_STEP),
    };
    let dir = out_dir(ov, "audit")?;
    let reports = full_audit(cfg.fd_step);

    let mut text = String::new();
    for r in &reports {
        text.push_str(&r.to_string());
        text.push('\n');
    }
    std::fs::write(dir.join("audit.txt"), &text)?;
    std::fs::write(
        dir.join("audit.json"),
        serde_json::to_string_pretty(&reports)? + "\n",
    )?;

    print!("{text}");
    println!("artifacts in {}", dir.display());
    Ok(())
}
