//! Closed-form predictors for the stochastic dynamics: log-contraction
//! statistics, trapped learning-rate intervals, escape rates, sharp-minima
//! constants, AMSGrad trapping, and continuous-time (Fokker–Planck)
//! stationary densities.
//!
//! Everything here is an exact expression evaluated over the finite atom set;
//! these are the oracles the Monte-Carlo ensembles are checked against.
//!
//! The central quantity is `μ = E[ln|1 − λx|]`: one SGD step on the quadratic
//! landscape multiplies `w` by `1 − λx`, so `ln|w_t/w_0|` is a random walk
//! with drift `μ`. Iterates collapse to the stationary point in probability
//! when `μ < 0` and escape when `μ > 0`, regardless of whether that point is
//! a minimum or a maximum.

use crate::landscapes::TwoPointDistribution;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("learning rate {lambda} outside the proposition's regime (0, 1]")]
    OutOfRegime { lambda: f64 },
    #[error("stationary density is not normalizable: {condition}")]
    NotNormalizable { condition: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Mean and variance of `ln|1 − λx|` under the noise law.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LogContractionStats {
    pub mu: f64,
    pub s2: f64,
    /// Set when an atom satisfies `λx = 1` exactly: that draw annihilates the
    /// iterate and `μ = −∞` (the λ=1 warm-up case).
    pub absorbing: bool,
}

/// Exact two-atom expectation/variance of `ln|1 − λx|`.
pub fn log_contraction(dist: &TwoPointDistribution, lambda: f64) -> LogContractionStats {
    let atoms = dist.atoms();
    if atoms
        .iter()
        .any(|&(x, p)| p > 0.0 && 1.0 - lambda * x == 0.0)
    {
        return LogContractionStats {
            mu: f64::NEG_INFINITY,
            s2: f64::INFINITY,
            absorbing: true,
        };
    }
    let mut mu = 0.0;
    let mut m2 = 0.0;
    for (x, p) in atoms {
        let l = (1.0 - lambda * x).abs().ln();
        mu += p * l;
        m2 += p * l * l;
    }
    LogContractionStats {
        mu,
        s2: (m2 - mu * mu).max(0.0),
        absorbing: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrappingRegime {
    /// `a < 0`: the interval where SGD converges in probability to the
    /// maximum.
    SaddleTrapping,
    /// `0 ≤ a < 1`: the same algebraic bounds; above the upper bound SGD
    /// escapes even a minimum (discrete-time instability).
    MinimumInstability,
    /// `a ≥ 1`: the closed form leaves its derivation regime.
    OutOfForm,
}

/// The learning-rate interval `a/(a−1) < λ < (a − √(a²−8a+8))/(2(a−1))`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrappedInterval {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub exists: bool,
    pub regime: TrappingRegime,
}

impl TrappedInterval {
    /// Strict membership; for `a < 1` this is exactly `μ < 0`.
    pub fn contains(&self, lambda: f64) -> bool {
        self.exists && self.lambda_lo < lambda && lambda < self.lambda_hi
    }
}

pub fn trapped_interval(a: f64) -> TrappedInterval {
    let disc = a * a - 8.0 * a + 8.0;
    if a >= 1.0 || disc <= 0.0 {
        return TrappedInterval {
            lambda_lo: f64::NAN,
            lambda_hi: f64::NAN,
            exists: false,
            regime: TrappingRegime::OutOfForm,
        };
    }
    TrappedInterval {
        lambda_lo: a / (a - 1.0),
        lambda_hi: (a - disc.sqrt()) / (2.0 * (a - 1.0)),
        exists: true,
        regime: if a < 0.0 {
            TrappingRegime::SaddleTrapping
        } else {
            TrappingRegime::MinimumInstability
        },
    }
}

/// `γ(λ) = ½·ln[(1−λ)(1−λ(a−1))]` for `λ ∈ (0, 1]`; at `λ = 1` this is `−∞`
/// (absorption). Identical to `log_contraction(curvature(a), λ).mu` in-regime.
pub fn escape_rate_curve(a: f64, lambda: f64) -> Result<f64, TheoryError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(TheoryError::OutOfRegime { lambda });
    }
    Ok(0.5 * ((1.0 - lambda).abs().ln() + (1.0 - lambda * (a - 1.0)).abs().ln()))
}

/// Optimal escape rate for `a < 0`: `λ* = a/(2(a−1))`,
/// `γ* = ln[(2−a)/(2√(1−a))]`.
pub fn optimal_escape(a: f64) -> (f64, f64) {
    let lambda_star = a / (2.0 * (a - 1.0));
    let gamma_star = ((2.0 - a) / (2.0 * (1.0 - a).sqrt())).ln();
    (lambda_star, gamma_star)
}

/// Largest `|a|` with `γ*(−|a|) ≤ ε`: `2·|−e^ε·√(e^{2ε}−1) − e^{2ε} + 1|`.
/// Exact inverse of `γ*`.
pub fn epsilon_bound_a(epsilon: f64) -> f64 {
    let e1 = epsilon.exp();
    let e2 = (2.0 * epsilon).exp();
    2.0 * (-e1 * (e2 - 1.0).sqrt() - e2 + 1.0).abs()
}

/// Sharp-minima construction constants: `b = 1/λ − 6`, convergence to the
/// sharp minima guaranteed for `λ ≤ (1+√6)/20`.
pub fn sharpflat_constants(lambda: f64) -> (f64, bool) {
    let b = 1.0 / lambda - 6.0;
    let converges = lambda <= (1.0 + 6.0f64.sqrt()) / 20.0;
    (b, converges)
}

/// AMSGrad trapping: with the limiting preconditioner `c` and `λ' = λ/√c`,
/// the iterates are trapped iff `λ'` falls in the quadratic landscape's
/// trapped interval.
pub fn amsgrad_trapping(a: f64, lambda_prime: f64) -> bool {
    let iv = trapped_interval(a);
    iv.exists && iv.lambda_lo <= lambda_prime && lambda_prime <= iv.lambda_hi
}

/// Continuous-time escape boundary `λ = −S·a/2` from the signal-to-noise
/// condition `−S·a/(2λ) > 1`.
pub fn continuous_escape_boundary(a: f64, batch_size: u32) -> f64 {
    debug_assert!(a < 0.0 && batch_size >= 1);
    -(batch_size as f64) * a / 2.0
}

/// Parameters of the continuous-time stationary analysis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FpStationaryParams {
    pub a: f64,
    /// Quartic coefficient; 0 for the pure quadratic landscape.
    pub b: f64,
    /// Additive-noise strength.
    pub sigma: f64,
    pub lambda: f64,
    /// Batch size `S`.
    pub batch_size: u32,
}

impl FpStationaryParams {
    fn validate(&self) -> Result<(), TheoryError> {
        if !(self.lambda > 0.0) {
            return Err(TheoryError::InvalidParameter(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if self.batch_size < 1 {
            return Err(TheoryError::InvalidParameter("batch size must be >= 1".into()));
        }
        if self.b < 0.0 || self.sigma < 0.0 {
            return Err(TheoryError::InvalidParameter(
                "b and sigma must be non-negative".into(),
            ));
        }
        Ok(())
    }

    fn s(&self) -> f64 {
        self.batch_size as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FpKind {
    /// Multiplicative noise only, `P(w) ∝ |w|^{−2−Sa/λ}`.
    Quadratic,
    /// Multiplicative noise with a quartic confining term,
    /// `P(w) ∝ |w|^{−2−Sa/λ}·exp(−Sb·w²/λ)`.
    Quartic,
    /// Multiplicative plus additive noise,
    /// `P(w) ∝ (w²+Sσ²)^{−1−Sa/(2λ)+S²bσ²/λ}·exp(−Sb·w²/λ)`.
    Additive,
}

/// A stationary density: either a proper grid-normalized density or the
/// delta-at-zero limit (absorbing phase), kept as an explicit flag rather
/// than a spiked array.
#[derive(Debug, Clone, Serialize)]
pub enum FpDensity {
    DeltaAtZero,
    Grid { w: Vec<f64>, p: Vec<f64> },
}

impl FpDensity {
    pub fn is_delta(&self) -> bool {
        matches!(self, FpDensity::DeltaAtZero)
    }
}

/// Default evaluation grid: 4001 points on `[−6, 6]`.
pub fn fp_default_grid() -> Vec<f64> {
    let n = 4001;
    (0..n)
        .map(|i| -6.0 + 12.0 * i as f64 / (n - 1) as f64)
        .collect()
}

/// Stationary density of the chosen kind on `grid`, normalized by trapezoidal
/// quadrature over the grid.
///
/// For the multiplicative kinds the absorbing phase (`−Sa/(2λ) < 1`) has no
/// proper density; with `allow_limit` the delta-at-zero limit is returned,
/// otherwise an error naming the violated condition.
pub fn fp_stationary_density(
    params: &FpStationaryParams,
    kind: FpKind,
    grid: &[f64],
    allow_limit: bool,
) -> Result<FpDensity, TheoryError> {
    params.validate()?;
    let s = params.s();
    let (a, b, sigma, lambda) = (params.a, params.b, params.sigma, params.lambda);
    if grid.len() < 2 {
        return Err(TheoryError::InvalidParameter("grid needs at least 2 points".into()));
    }

    let snr = -s * a / (2.0 * lambda);
    let unnormalized: Vec<f64> = match kind {
        FpKind::Quadratic | FpKind::Quartic => {
            if !(snr > 1.0) {
                if allow_limit {
                    return Ok(FpDensity::DeltaAtZero);
                }
                return Err(TheoryError::NotNormalizable {
                    condition: format!(
                        "-S*a/(2*lambda) = {snr} <= 1: absorbing phase, delta at w = 0"
                    ),
                });
            }
            let expo = -2.0 - s * a / lambda; // > 0 in the escape phase
            grid.iter()
                .map(|&w| {
                    let base = w.abs().powf(expo);
                    match kind {
                        FpKind::Quadratic => base,
                        _ => base * (-s * b * w * w / lambda).exp(),
                    }
                })
                .collect()
        }
        FpKind::Additive => {
            if !(sigma > 0.0) {
                return Err(TheoryError::InvalidParameter(
                    "additive kind requires sigma > 0".into(),
                ));
            }
            let expo = -1.0 - s * a / (2.0 * lambda) + s * s * b * sigma * sigma / lambda;
            grid.iter()
                .map(|&w| (w * w + s * sigma * sigma).powf(expo) * (-s * b * w * w / lambda).exp())
                .collect()
        }
    };

    let mass = trapezoid(grid, &unnormalized);
    if !(mass.is_finite() && mass > 0.0) {
        return Err(TheoryError::NotNormalizable {
            condition: format!("grid quadrature produced mass {mass}"),
        });
    }
    Ok(FpDensity::Grid {
        w: grid.to_vec(),
        p: unnormalized.into_iter().map(|v| v / mass).collect(),
    })
}

/// Likelihood maximizer of the stationary density: `{0}` for `a > −2λ/S`,
/// otherwise `{±√(−λ/(Sb) − a/(2b))}`. Requires `b > 0`.
pub fn fp_mode(params: &FpStationaryParams) -> Result<Vec<f64>, TheoryError> {
    params.validate()?;
    if !(params.b > 0.0) {
        return Err(TheoryError::InvalidParameter("fp_mode requires b > 0".into()));
    }
    let s = params.s();
    let critical_a = -2.0 * params.lambda / s;
    if params.a >= critical_a {
        Ok(vec![0.0])
    } else {
        let w = (-params.lambda / (s * params.b) - params.a / (2.0 * params.b)).sqrt();
        Ok(vec![-w, w])
    }
}

/// The critical curvature `−2λ/S` below which the stationary mode leaves 0.
pub fn fp_critical_a(lambda: f64, batch_size: u32) -> f64 {
    -2.0 * lambda / batch_size as f64
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..x.len() {
        acc += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    }
    acc
}
