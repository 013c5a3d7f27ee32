//! Seeded Monte-Carlo ensembles of (landscape × optimizer) trajectories and
//! the empirical observables built on them: escape probability, escape rate,
//! terminal-basin classification, histograms, and phase-diagram sweeps.
//!
//! Run `i` draws from a ChaCha8 stream selected by `(master_seed, i)`, so the
//! result is bit-identical regardless of thread count or scheduling; the runs
//! themselves execute in parallel.

use crate::landscapes::{l2_norm, CatalogEntry, LandscapeSpec, StochasticObjective};
use crate::optimizers::{
    adaptive_step_in_place, project_in_place, sgd_step_in_place, BoxConstraint, HyperParams,
    OptimizerState, StepError, UpdateRule,
};
use crate::stats;
use crate::theory::trapped_interval;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("invalid ensemble config: {0}")]
    InvalidConfig(String),
    #[error("step {step} is not in the snapshot schedule")]
    SnapshotMissing { step: u64 },
    #[error("run {run} failed: {source}")]
    Step {
        run: usize,
        #[source]
        source: StepError,
    },
}

pub const DEFAULT_DIVERGENCE_CAP: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleConfig {
    pub n_runs: usize,
    pub n_steps: u64,
    /// Per-coordinate uniform initialization intervals; a degenerate interval
    /// (lo == hi) is a point init.
    pub init: Vec<(f64, f64)>,
    pub master_seed: u64,
    /// Sorted step indices at which the parameter vector is recorded
    /// (step 0 = initialization).
    pub snapshot_steps: Vec<u64>,
    pub divergence_cap: f64,
}

impl EnsembleConfig {
    pub fn new(n_runs: usize, n_steps: u64, init: Vec<(f64, f64)>, master_seed: u64) -> Self {
        Self {
            n_runs,
            n_steps,
            init,
            master_seed,
            snapshot_steps: Vec::new(),
            divergence_cap: DEFAULT_DIVERGENCE_CAP,
        }
    }

    pub fn with_snapshots(mut self, steps: Vec<u64>) -> Self {
        self.snapshot_steps = steps;
        self
    }

    pub fn with_divergence_cap(mut self, cap: f64) -> Self {
        self.divergence_cap = cap;
        self
    }

    fn validate(&self, dim: usize) -> Result<(), EnsembleError> {
        if self.n_runs == 0 {
            return Err(EnsembleError::InvalidConfig("n_runs must be positive".into()));
        }
        if self.init.len() != dim {
            return Err(EnsembleError::InvalidConfig(format!(
                "init has {} intervals for a {dim}-dimensional landscape",
                self.init.len()
            )));
        }
        if self.init.iter().any(|(lo, hi)| lo > hi || !lo.is_finite() || !hi.is_finite()) {
            return Err(EnsembleError::InvalidConfig("invalid init interval".into()));
        }
        if !(self.divergence_cap > 0.0) {
            return Err(EnsembleError::InvalidConfig("divergence cap must be positive".into()));
        }
        let mut prev = None;
        for &s in &self.snapshot_steps {
            if s > self.n_steps {
                return Err(EnsembleError::InvalidConfig(format!(
                    "snapshot step {s} beyond n_steps {}",
                    self.n_steps
                )));
            }
            if prev.map_or(false, |p| s <= p) {
                return Err(EnsembleError::InvalidConfig(
                    "snapshot steps must be strictly increasing".into(),
                ));
            }
            prev = Some(s);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// In-flight marker; finished ensembles never report it.
    Running,
    /// The iterate reached exactly zero (a fixed point of every landscape
    /// here) and was frozen.
    AbsorbedZero,
    /// The iterate left the divergence cap or became non-finite; frozen at
    /// the cap from the offending step on.
    Diverged,
    Completed,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub initial_w: Vec<f64>,
    pub terminal_w: Vec<f64>,
    pub status: RunStatus,
    pub first_divergence_step: Option<u64>,
}

/// Configuration echo stored with every result (and serialized next to every
/// artifact derived from it).
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub landscape: Option<LandscapeSpec>,
    pub rule: UpdateRule,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub box_enabled: bool,
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
    pub n_runs: usize,
    pub n_steps: u64,
    pub master_seed: u64,
    pub snapshot_steps: Vec<u64>,
    pub divergence_cap: f64,
    pub init: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleResult {
    pub runs: Vec<RunRecord>,
    pub snapshot_steps: Vec<u64>,
    /// `snapshots[run][k]` is the parameter vector at `snapshot_steps[k]`.
    pub snapshots: Vec<Vec<Vec<f64>>>,
    pub provenance: Provenance,
    /// Warning flag: every run diverged.
    pub all_diverged: bool,
}

impl EnsembleResult {
    pub fn dim(&self) -> usize {
        self.runs[0].terminal_w.len()
    }

    fn snapshot_index(&self, step: u64) -> Result<usize, EnsembleError> {
        self.snapshot_steps
            .iter()
            .position(|&s| s == step)
            .ok_or(EnsembleError::SnapshotMissing { step })
    }
}

/// Deterministic per-cell/per-sweep seed derivation (splitmix64 finalizer).
pub fn mix_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct RunOutput {
    record: RunRecord,
    snaps: Vec<Vec<f64>>,
}

fn clamp_to_cap(w: &[f64], prev: &[f64], cap: f64) -> Vec<f64> {
    w.iter()
        .zip(prev)
        .map(|(&v, &p)| {
            let v = if v.is_finite() { v } else { p };
            v.clamp(-cap, cap)
        })
        .collect()
}

fn simulate_run(
    obj: &dyn StochasticObjective,
    hp: &HyperParams,
    box_: &BoxConstraint,
    cfg: &EnsembleConfig,
    run_index: usize,
) -> Result<RunOutput, EnsembleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    rng.set_stream(run_index as u64);

    let w0: Vec<f64> = cfg
        .init
        .iter()
        .map(|&(lo, hi)| if lo < hi { rng.random_range(lo..hi) } else { lo })
        .collect();

    let mut state = OptimizerState::new(w0.clone());
    project_in_place(&mut state, box_);

    let mut snaps: Vec<Vec<f64>> = Vec::with_capacity(cfg.snapshot_steps.len());
    let mut next_snap = 0usize;
    if cfg.snapshot_steps.first() == Some(&0) {
        snaps.push(state.w.clone());
        next_snap = 1;
    }

    let mut status = RunStatus::Running;
    let mut first_divergence_step = None;

    for t in 1..=cfg.n_steps {
        let prev_w = state.w.clone();
        let step_result = match hp.rule {
            UpdateRule::Gd => match obj.mean_grad(&state.w) {
                Ok(g) => {
                    sgd_step_in_place(&mut state, &g, hp.learning_rate);
                    if state.w.iter().all(|v| v.is_finite()) {
                        Ok(())
                    } else {
                        Err(StepError::NonFinite { step: t })
                    }
                }
                Err(_) => Err(StepError::NonFinite { step: t }),
            },
            UpdateRule::Sgd => {
                let x = obj.noise().sample(&mut rng);
                match obj.sample_grad(&state.w, x) {
                    Ok(g) => {
                        sgd_step_in_place(&mut state, &g, hp.learning_rate);
                        if state.w.iter().all(|v| v.is_finite()) {
                            Ok(())
                        } else {
                            Err(StepError::NonFinite { step: t })
                        }
                    }
                    Err(_) => Err(StepError::NonFinite { step: t }),
                }
            }
            UpdateRule::Adam | UpdateRule::AmsGrad => {
                let x = obj.noise().sample(&mut rng);
                match obj.sample_grad(&state.w, x) {
                    Ok(g) => adaptive_step_in_place(
                        &mut state,
                        &g,
                        hp,
                        matches!(hp.rule, UpdateRule::AmsGrad),
                    ),
                    Err(_) => Err(StepError::NonFinite { step: t }),
                }
            }
        };

        match step_result {
            Ok(()) => {}
            Err(StepError::NonFinite { step }) => {
                state.w = clamp_to_cap(&state.w, &prev_w, cfg.divergence_cap);
                status = RunStatus::Diverged;
                first_divergence_step = Some(step);
            }
            Err(e @ StepError::ZeroPreconditioner { .. }) => {
                return Err(EnsembleError::Step {
                    run: run_index,
                    source: e,
                });
            }
        }

        if status == RunStatus::Running {
            project_in_place(&mut state, box_);
            if state.w.iter().any(|v| v.abs() > cfg.divergence_cap) {
                state.w = clamp_to_cap(&state.w, &prev_w, cfg.divergence_cap);
                status = RunStatus::Diverged;
                first_divergence_step = Some(t);
            } else if state.w.iter().all(|&v| v == 0.0) {
                status = RunStatus::AbsorbedZero;
            }
        }

        if next_snap < cfg.snapshot_steps.len() && cfg.snapshot_steps[next_snap] == t {
            snaps.push(state.w.clone());
            next_snap += 1;
        }

        if status != RunStatus::Running {
            break;
        }
    }

    // A frozen run keeps its terminal value for the remaining snapshots.
    while next_snap < cfg.snapshot_steps.len() {
        snaps.push(state.w.clone());
        next_snap += 1;
    }
    if status == RunStatus::Running {
        status = RunStatus::Completed;
    }

    Ok(RunOutput {
        record: RunRecord {
            initial_w: w0,
            terminal_w: state.w,
            status,
            first_divergence_step,
        },
        snaps,
    })
}

/// Run `cfg.n_runs` independent trajectories of `hp` on `obj`.
///
/// The result is identical for any execution order or degree of parallelism.
/// An ensemble where every run diverged is flagged, not an error.
pub fn run_ensemble(
    obj: &dyn StochasticObjective,
    hp: &HyperParams,
    box_: &BoxConstraint,
    cfg: &EnsembleConfig,
) -> Result<EnsembleResult, EnsembleError> {
    run_ensemble_with_spec(obj, hp, box_, cfg, None)
}

/// As [`run_ensemble`], recording the landscape spec in the provenance echo.
pub fn run_ensemble_with_spec(
    obj: &dyn StochasticObjective,
    hp: &HyperParams,
    box_: &BoxConstraint,
    cfg: &EnsembleConfig,
    spec: Option<LandscapeSpec>,
) -> Result<EnsembleResult, EnsembleError> {
    cfg.validate(obj.dim())?;
    hp.validate().map_err(EnsembleError::InvalidConfig)?;
    if box_.lo.len() != obj.dim() {
        return Err(EnsembleError::InvalidConfig(
            "box constraint dimension mismatch".into(),
        ));
    }

    let outputs: Vec<RunOutput> = (0..cfg.n_runs)
        .into_par_iter()
        .map(|i| simulate_run(obj, hp, box_, cfg, i))
        .collect::<Result<_, _>>()?;

    let mut runs = Vec::with_capacity(outputs.len());
    let mut snapshots = Vec::with_capacity(outputs.len());
    for out in outputs {
        runs.push(out.record);
        snapshots.push(out.snaps);
    }
    let all_diverged = runs.iter().all(|r| r.status == RunStatus::Diverged);

    Ok(EnsembleResult {
        runs,
        snapshot_steps: cfg.snapshot_steps.clone(),
        snapshots,
        provenance: Provenance {
            landscape: spec,
            rule: hp.rule,
            learning_rate: hp.learning_rate,
            beta1: hp.beta1,
            beta2: hp.beta2,
            box_enabled: box_.enabled,
            box_lo: box_.lo.clone(),
            box_hi: box_.hi.clone(),
            n_runs: cfg.n_runs,
            n_steps: cfg.n_steps,
            master_seed: cfg.master_seed,
            snapshot_steps: cfg.snapshot_steps.clone(),
            divergence_cap: cfg.divergence_cap,
            init: cfg.init.clone(),
        },
        all_diverged,
    })
}

/// Fraction of runs with terminal `‖w‖ > τ` or diverged status; exact zeros
/// count as not escaped.
pub fn escape_probability(result: &EnsembleResult, tau_escape: f64) -> f64 {
    assert!(tau_escape > 0.0, "escape threshold must be positive");
    let escaped = result
        .runs
        .iter()
        .filter(|r| r.status == RunStatus::Diverged || l2_norm(&r.terminal_w) > tau_escape)
        .count();
    escaped as f64 / result.runs.len() as f64
}

/// Ensemble escape-rate estimate at `t_est`:
/// mean over runs of `ln|w_t / w_0| / t`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EscapeRateEstimate {
    pub gamma_hat: f64,
    pub stderr: f64,
    /// Runs entering the mean.
    pub n_used: usize,
    /// Runs whose iterate is exactly zero at `t_est`; excluded from the
    /// log-based mean and reported here.
    pub n_zero: usize,
    /// Runs frozen at the divergence cap before `t_est` (included, but a
    /// nonzero count means the cap was binding).
    pub n_diverged: usize,
}

pub fn escape_rate_estimate(
    result: &EnsembleResult,
    t_est: u64,
) -> Result<EscapeRateEstimate, EnsembleError> {
    let idx = result.snapshot_index(t_est)?;
    if result.runs.iter().any(|r| l2_norm(&r.initial_w) == 0.0) {
        return Err(EnsembleError::InvalidConfig(
            "escape-rate estimation requires w_0 != 0 for all runs".into(),
        ));
    }
    let mut vals = Vec::with_capacity(result.runs.len());
    let mut n_zero = 0usize;
    let mut n_diverged = 0usize;
    for (run, snaps) in result.runs.iter().zip(&result.snapshots) {
        let wt = l2_norm(&snaps[idx]);
        if wt == 0.0 {
            n_zero += 1;
            continue;
        }
        if run
            .first_divergence_step
            .map_or(false, |s| s <= t_est)
        {
            n_diverged += 1;
        }
        let w0 = l2_norm(&run.initial_w);
        vals.push((wt.max(1e-300).ln() - w0.ln()) / t_est as f64);
    }
    if vals.is_empty() {
        return Ok(EscapeRateEstimate {
            gamma_hat: f64::NAN,
            stderr: f64::NAN,
            n_used: 0,
            n_zero,
            n_diverged,
        });
    }
    Ok(EscapeRateEstimate {
        gamma_hat: stats::mean(&vals),
        stderr: if vals.len() > 1 {
            stats::stderr_of_mean(&vals)
        } else {
            f64::NAN
        },
        n_used: vals.len(),
        n_zero,
        n_diverged,
    })
}

/// Escape-probability grid over (a, λ) with the theoretical boundary.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseDiagramGrid {
    pub a_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    /// `escape_probability[i][j]` for `a_values[i]`, `lambda_values[j]`.
    pub escape_probability: Vec<Vec<f64>>,
    /// Cells where every run diverged.
    pub all_diverged: Vec<Vec<bool>>,
    /// `(a, λ_lo, λ_hi)` rows of the trapped interval where its closed form
    /// exists.
    pub theory_boundary: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PhaseFamily {
    Quadratic,
    Quartic,
}

impl PhaseFamily {
    pub fn spec(&self, a: f64) -> LandscapeSpec {
        match self {
            PhaseFamily::Quadratic => LandscapeSpec::Quadratic { a },
            PhaseFamily::Quartic => LandscapeSpec::Quartic { a },
        }
    }

    /// Default escape threshold: 10 for the quadratic; for the quartic with
    /// a < 0, half the distance to the nearest minimum (the quartic term
    /// bounds trajectories, so "escape" means leaving the saddle's basin).
    pub fn default_tau(&self, a: f64) -> f64 {
        match self {
            PhaseFamily::Quadratic => 10.0,
            PhaseFamily::Quartic => {
                if a < 0.0 {
                    0.5 * (-a / 2.0).sqrt()
                } else {
                    10.0
                }
            }
        }
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// SGD escape-probability sweep over an (a, λ) grid.
///
/// Each cell runs `cfg.n_runs` trajectories with a cell-specific seed derived
/// from `(cfg.master_seed, cell index)`.
pub fn phase_sweep(
    family: PhaseFamily,
    a_range: (f64, f64),
    lambda_range: (f64, f64),
    grid_n: (usize, usize),
    cfg: &EnsembleConfig,
    tau_override: Option<f64>,
) -> Result<PhaseDiagramGrid, EnsembleError> {
    if grid_n.0 < 2 || grid_n.1 < 2 {
        return Err(EnsembleError::InvalidConfig("grid needs >= 2 points per axis".into()));
    }
    let a_values = linspace(a_range.0, a_range.1, grid_n.0);
    let lambda_values = linspace(lambda_range.0, lambda_range.1, grid_n.1);

    let mut escape = vec![vec![0.0; lambda_values.len()]; a_values.len()];
    let mut diverged = vec![vec![false; lambda_values.len()]; a_values.len()];
    for (i, &a) in a_values.iter().enumerate() {
        let obj = family.spec(a).build();
        let tau = tau_override.unwrap_or_else(|| family.default_tau(a));
        for (j, &lambda) in lambda_values.iter().enumerate() {
            let cell = (i * lambda_values.len() + j) as u64;
            let cell_cfg = EnsembleConfig {
                master_seed: mix_seed(cfg.master_seed, cell),
                snapshot_steps: Vec::new(),
                ..cfg.clone()
            };
            let hp = HyperParams::sgd(lambda);
            let result = run_ensemble(obj.as_ref(), &hp, &BoxConstraint::disabled(1), &cell_cfg)?;
            escape[i][j] = escape_probability(&result, tau);
            diverged[i][j] = result.all_diverged;
        }
    }

    let theory_boundary = a_values
        .iter()
        .filter_map(|&a| {
            let iv = trapped_interval(a);
            iv.exists.then_some((a, iv.lambda_lo, iv.lambda_hi))
        })
        .collect();

    Ok(PhaseDiagramGrid {
        a_values,
        lambda_values,
        escape_probability: escape,
        all_diverged: diverged,
        theory_boundary,
    })
}

/// Terminal-basin classification against a critical-point catalog.
#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    /// One count per catalog entry, in catalog order.
    pub counts: Vec<(String, usize)>,
    pub diverged: usize,
    pub unclassified: usize,
}

pub fn classify_terminal(
    result: &EnsembleResult,
    catalog: &[CatalogEntry],
    radius: f64,
) -> Classification {
    assert!(radius > 0.0, "classification radius must be positive");
    let mut counts = vec![0usize; catalog.len()];
    let mut diverged = 0usize;
    let mut unclassified = 0usize;
    for run in &result.runs {
        if run.status == RunStatus::Diverged {
            diverged += 1;
            continue;
        }
        let best = catalog
            .iter()
            .enumerate()
            .map(|(k, e)| (k, e.distance_to(&run.terminal_w)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((k, d)) if d <= radius => counts[k] += 1,
            _ => unclassified += 1,
        }
    }
    Classification {
        counts: catalog
            .iter()
            .map(|e| e.label.clone())
            .zip(counts)
            .collect(),
        diverged,
        unclassified,
    }
}

/// Histogram of the first coordinate at a snapshot, with out-of-range mass in
/// underflow/overflow bins.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let width = (self.hi - self.lo) / self.counts.len() as f64;
        (self.lo + i as f64 * width, self.lo + (i + 1) as f64 * width)
    }
}

pub fn histogram(
    result: &EnsembleResult,
    snapshot_step: u64,
    bins: usize,
    range: (f64, f64),
) -> Result<Histogram, EnsembleError> {
    assert!(bins > 0 && range.0 < range.1);
    let idx = result.snapshot_index(snapshot_step)?;
    let (lo, hi) = range;
    let width = (hi - lo) / bins as f64;
    let mut h = Histogram {
        lo,
        hi,
        counts: vec![0; bins],
        underflow: 0,
        overflow: 0,
    };
    for snaps in &result.snapshots {
        let v = snaps[idx][0];
        if v < lo {
            h.underflow += 1;
        } else if v >= hi {
            h.overflow += 1;
        } else {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            h.counts[b] += 1;
        }
    }
    Ok(h)
}
