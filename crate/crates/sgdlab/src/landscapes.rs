//! Stochastic objectives with explicit finite-atom noise laws.
//!
//! Every landscape here is a pair `(L̂(w; x), p(x))`: a sampled loss together
//! with a two-point (or degenerate) data distribution. Because the noise law
//! has finitely many atoms, means, mean gradients and Hessians are exact sums,
//! and every critical point is known in closed form.
//!
//! The four landscapes:
//!
//! * [`QuadraticObjective`] — `L̂ = x·w²/2`, mean `a/4·w²`. The saddle/maximum
//!   escape problem in one dimension.
//! * [`QuarticObjective`] — `L̂ = x·w²/2 + w⁴/4`, a bistable version whose
//!   quartic term keeps trajectories bounded.
//! * [`SharpFlat2D`] — a two-dimensional landscape with two flat and two sharp
//!   minima, noise acting on the `w1` axis only.
//! * [`ToyNetObjective`] — a two-layer, one-neuron network `f(x) = w2·(w1·x)²`
//!   trained by MSE on a single input with an uncertain label.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LandscapeError {
    #[error("non-finite parameters (prior divergence): {0:?}")]
    NonFiniteParameters(Vec<f64>),
    #[error("not a critical point of the mean loss: |grad| = {grad_norm:.3e} at {point:?}")]
    NotACriticalPoint { point: Vec<f64>, grad_norm: f64 },
}

/// Two-atom law: `x_hi` with probability `p_hi`, otherwise `x_lo`.
///
/// A point mass is the degenerate case `p_hi = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointDistribution {
    pub x_hi: f64,
    pub x_lo: f64,
    pub p_hi: f64,
}

impl TwoPointDistribution {
    pub fn new(x_hi: f64, x_lo: f64, p_hi: f64) -> Self {
        assert!(
            (0.0..=1.0).contains(&p_hi),
            "p_hi must lie in [0, 1], got {p_hi}"
        );
        assert!(x_hi.is_finite() && x_lo.is_finite());
        Self { x_hi, x_lo, p_hi }
    }

    /// The curvature family used by the scalar landscapes:
    /// atoms `{1, a−1}` with equal probability, so the mean is exactly `a/2`.
    pub fn curvature(a: f64) -> Self {
        Self::new(1.0, a - 1.0, 0.5)
    }

    /// Symmetric sign noise `{+1, −1}`, each with probability 1/2.
    pub fn sign() -> Self {
        Self::new(1.0, -1.0, 0.5)
    }

    pub fn point_mass(x: f64) -> Self {
        Self::new(x, x, 1.0)
    }

    /// Atom/probability pairs, for exact expectations.
    pub fn atoms(&self) -> [(f64, f64); 2] {
        [(self.x_hi, self.p_hi), (self.x_lo, 1.0 - self.p_hi)]
    }

    pub fn mean(&self) -> f64 {
        self.p_hi * self.x_hi + (1.0 - self.p_hi) * self.x_lo
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.p_hi * (self.x_hi - m).powi(2) + (1.0 - self.p_hi) * (self.x_lo - m).powi(2)
    }

    /// Draw one atom; i.i.d. across calls within a stream.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        if rng.random::<f64>() < self.p_hi {
            self.x_hi
        } else {
            self.x_lo
        }
    }
}

/// Draw a data point from the noise law.
pub fn sample_noise(dist: &TwoPointDistribution, rng: &mut impl Rng) -> f64 {
    dist.sample(rng)
}

/// A sampled objective `(L̂, p(x))` with exact expectations over the atom set.
///
/// Loss accessors assume finite `w` (the simulation engine guards divergence
/// before evaluating them); gradient accessors check and report non-finite
/// parameters so a diverged trajectory cannot silently keep stepping.
pub trait StochasticObjective: Send + Sync {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    /// The data/noise law `p(x)`.
    fn noise(&self) -> &TwoPointDistribution;
    fn sample_loss(&self, w: &[f64], x: f64) -> f64;
    fn sample_grad(&self, w: &[f64], x: f64) -> Result<Vec<f64>, LandscapeError>;
    fn mean_loss(&self, w: &[f64]) -> f64;
    fn mean_grad(&self, w: &[f64]) -> Result<Vec<f64>, LandscapeError>;
    /// Symmetric matrix of second derivatives of the mean loss.
    fn hessian(&self, w: &[f64]) -> Vec<Vec<f64>>;
    fn critical_point_catalog(&self) -> Vec<CatalogEntry>;
}

fn check_finite(w: &[f64]) -> Result<(), LandscapeError> {
    if w.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(LandscapeError::NonFiniteParameters(w.to_vec()))
    }
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Trace of the Hessian at a catalog critical point.
///
/// Errors when `w_star` is not a critical point of the mean loss
/// (`‖mean_grad‖ > 1e-8`).
pub fn sharpness(obj: &dyn StochasticObjective, w_star: &[f64]) -> Result<f64, LandscapeError> {
    let g = obj.mean_grad(w_star)?;
    let gnorm = l2_norm(&g);
    if gnorm > 1e-8 {
        return Err(LandscapeError::NotACriticalPoint {
            point: w_star.to_vec(),
            grad_norm: gnorm,
        });
    }
    let h = obj.hessian(w_star);
    Ok((0..obj.dim()).map(|i| h[i][i]).sum())
}

/// Central-difference Hessian of the mean loss, built from `mean_grad`.
pub fn numerical_hessian(obj: &dyn StochasticObjective, w: &[f64], step: f64) -> Vec<Vec<f64>> {
    let d = obj.dim();
    let mut h = vec![vec![0.0; d]; d];
    for j in 0..d {
        let mut wp = w.to_vec();
        let mut wm = w.to_vec();
        wp[j] += step;
        wm[j] -= step;
        let gp = obj.mean_grad(&wp).expect("finite probe point");
        let gm = obj.mean_grad(&wm).expect("finite probe point");
        for i in 0..d {
            h[i][j] = (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    // Symmetrize; the column-wise differences agree only to O(step^2).
    for i in 0..d {
        for j in (i + 1)..d {
            let s = 0.5 * (h[i][j] + h[j][i]);
            h[i][j] = s;
            h[j][i] = s;
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CriticalKind {
    Minimum,
    /// Stationary but not a local minimum (includes local maxima).
    SaddleOrMax,
}

/// Geometry of a non-isolated critical set, used for distance queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ManifoldGeometry {
    /// `{ (w1, w2) : w2·w1² = 1/2, w2 > 0 }`
    ToyNetGlobalMin,
    /// `{ (w1, w2) : w1 = 0, w2 ≥ 0 }`
    ToyNetSaddle,
}

#[derive(Debug, Clone, Serialize)]
pub enum CriticalLocus {
    Point(Vec<f64>),
    Manifold {
        description: String,
        geometry: ManifoldGeometry,
        /// Representative points on the manifold, for tests and classification.
        samples: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub label: String,
    pub kind: CriticalKind,
    pub locus: CriticalLocus,
    pub mean_loss: f64,
    /// Trace of the mean-loss Hessian at the point (representative sample for
    /// manifolds).
    pub sharpness: f64,
}

impl CatalogEntry {
    /// Points this entry contributes to grad-vanishing checks and tests.
    pub fn probe_points(&self) -> Vec<Vec<f64>> {
        match &self.locus {
            CriticalLocus::Point(p) => vec![p.clone()],
            CriticalLocus::Manifold { samples, .. } => samples.clone(),
        }
    }

    /// Euclidean distance from `w` to this critical set.
    pub fn distance_to(&self, w: &[f64]) -> f64 {
        match &self.locus {
            CriticalLocus::Point(p) => {
                let mut s = 0.0;
                for (a, b) in p.iter().zip(w) {
                    s += (a - b) * (a - b);
                }
                s.sqrt()
            }
            CriticalLocus::Manifold { geometry, .. } => match geometry {
                ManifoldGeometry::ToyNetSaddle => {
                    if w[1] >= 0.0 {
                        w[0].abs()
                    } else {
                        (w[0] * w[0] + w[1] * w[1]).sqrt()
                    }
                }
                ManifoldGeometry::ToyNetGlobalMin => toynet_global_min_distance(w[0], w[1]),
            },
        }
    }
}

/// Distance from (p1, p2) to the curve w2 = 1/(2 w1²): coarse scan over both
/// branches, then golden-section refinement.
fn toynet_global_min_distance(p1: f64, p2: f64) -> f64 {
    let d2 = |t: f64| {
        let q = 1.0 / (2.0 * t * t);
        (p1 - t) * (p1 - t) + (p2 - q) * (p2 - q)
    };
    let mut best_t = 1.0;
    let mut best = d2(1.0);
    for k in 0..400 {
        // |t| log-spaced in [5e-2, 20]
        let mag = 0.05 * (20.0f64 / 0.05).powf(k as f64 / 399.0);
        for t in [mag, -mag] {
            let v = d2(t);
            if v < best {
                best = v;
                best_t = t;
            }
        }
    }
    // Golden-section around the best coarse sample.
    let phi = 0.618_033_988_749_895;
    let (mut lo, mut hi) = (best_t * 0.8, best_t * 1.25);
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let (mut x1, mut x2) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
    let (mut f1, mut f2) = (d2(x1), d2(x2));
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = d2(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = d2(x2);
        }
    }
    best.min(f1).min(f2).sqrt()
}

/// Serializable landscape description; builds the concrete objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "landscape", rename_all = "lowercase")]
pub enum LandscapeSpec {
    Quadratic { a: f64 },
    Quartic { a: f64 },
    SharpFlat { a: f64, b: f64 },
    ToyNet,
}

impl LandscapeSpec {
    pub fn build(&self) -> Box<dyn StochasticObjective> {
        match *self {
            LandscapeSpec::Quadratic { a } => Box::new(QuadraticObjective::new(a)),
            LandscapeSpec::Quartic { a } => Box::new(QuarticObjective::new(a)),
            LandscapeSpec::SharpFlat { a, b } => Box::new(SharpFlat2D::new(a, b)),
            LandscapeSpec::ToyNet => Box::new(ToyNetObjective::new()),
        }
    }

    /// Per-coordinate uniform initialization intervals used by the
    /// experiments: U[−1,1] per coordinate, except the toy net where
    /// w2 ~ U[0,1].
    pub fn default_init(&self) -> Vec<(f64, f64)> {
        match self {
            LandscapeSpec::Quadratic { .. } | LandscapeSpec::Quartic { .. } => {
                vec![(-1.0, 1.0)]
            }
            LandscapeSpec::SharpFlat { .. } => vec![(-1.0, 1.0), (-1.0, 1.0)],
            LandscapeSpec::ToyNet => vec![(-1.0, 1.0), (0.0, 1.0)],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            LandscapeSpec::Quadratic { .. } | LandscapeSpec::Quartic { .. } => 1,
            LandscapeSpec::SharpFlat { .. } | LandscapeSpec::ToyNet => 2,
        }
    }
}

/// `L̂(w; x) = x·w²/2` with `x ∈ {1, a−1}`, so the mean loss is `(a/4)·w²`.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    a: f64,
    dist: TwoPointDistribution,
}

impl QuadraticObjective {
    pub fn new(a: f64) -> Self {
        Self {
            a,
            dist: TwoPointDistribution::curvature(a),
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }
}

impl StochasticObjective for QuadraticObjective {
    fn name(&self) -> &'static str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        1
    }

    fn noise(&self) -> &TwoPointDistribution {
        &self.dist
    }

    fn sample_loss(&self, w: &[f64], x: f64) -> f64 {
        0.5 * x * w[0] * w[0]
    }

    fn sample_grad(&self, w: &[f64], x: f64) -> Result<Vec<f64>, LandscapeError> {
        check_finite(w)?;
        Ok(vec![x * w[0]])
    }

    fn mean_loss(&self, w: &[f64]) -> f64 {
        0.25 * self.a * w[0] * w[0]
    }

    fn mean_grad(&self, w: &[f64]) -> Result<Vec<f64>, LandscapeError> {
        check_finite(w)?;
        Ok(vec![0.5 * self.a * w[0]])
    }

    fn hessian(&self, _w: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![0.5 * self.a]]
    }

    fn critical_point_catalog(&self) -> Vec<CatalogEntry> {
        let kind = if self.a > 0.0 {
            CriticalKind::Minimum
        } else {
            CriticalKind::SaddleOrMax
        };
        vec![CatalogEntry {
            label: "origin".into(),
            kind,
            locus: CriticalLocus::Point(vec![0.0]),
            mean_loss: 0.0,
            sharpness: 0.5 * self.a,
        }]
    }
}

/// `L̂(w; x) = x·w²/2 + w⁴/4`; for `a < 0` the mean loss is a double well with
/// minima at `±√(−a/2)` and a maximum at the origin.
#[derive(Debug, Clone)]
pub struct QuarticObjective {
    a: f64,
    dist: TwoPointDistribution,
}

impl QuarticObjective {
    pub fn new(a: f64) -> Self {
        Self {
            a,
            dist: TwoPointDistribution::curvature(a),
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }
}

impl StochasticObjective for QuarticObjective {
    fn name(&self) -> &'static str {
        "quartic"
    }

    fn dim(&self) -> usize {
        1
    }

    fn noise(&self) -> &TwoPointDistribution {
        &self.dist
    }

    fn sample_loss(&self, w: &[f64], x: f64) -> f64 {
        let w = w[0];
        0.5 * x * w * w + 0.25 * w.powi(4)
    }

    fn sample_grad(&self, w: &[f64], x: f64) -> Result<Vec<f64>, LandscapeError> {
        check_finite(w)?;
        let w = w[0];
        Ok(vec![x * w + w.powi(3)])
    }

    fn mean_loss(&self, w: &[f64]) -> f64 {
        let w = w[0];
        0.25 * self.a * w * w + 0.25 * w.powi(4)
    }

    fn mean_grad(&self, w: &[f64]) -> Result<Vec<f64>, LandscapeError> {
        check_finite(w)?;
        let w = w[0];
        Ok(vec![0.5 * self.a * w + w.powi(3)])
    }

    fn hessian(&self, w: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![0.5 * self.a + 3.0 * w[0] * w[0]]]
    }

    fn critical_point_catalog(&self) -> Vec<CatalogEntry> {
        let origin_kind = if self.a > 0.0 {
            CriticalKind::Minimum
        } else {
            CriticalKind::SaddleOrMax
        };
        let mut entries = vec![CatalogEntry {
            label: "origin".into(),
            kind: origin_kind,
            locus: CriticalLocus::Point(vec![0.0]),
            mean_loss: 0.0,
            sharpness: 0.5 * self.a,
        }];
        if self.a < 0.0 {
            let r = (-0.5 * self.a).sqrt();
            // L(±r) = (a/4)r² + r⁴/4 = −a²/16; trace = a/2 + 3r² = −a.
            for (label, w) in [("min+", r), ("min-", -r)] {
                entries.push(CatalogEntry {
                    label: label.into(),
                    kind: CriticalKind::Minimum,
                    locus: CriticalLocus::Point(vec![w]),
                    mean_loss: -self.a * self.a / 16.0,
                    sharpness: -self.a,
                });
            }
        }
        entries
    }
}

/// Two-dimensional landscape with two flat minima `(±1/√2, 0)` (sharpness
/// `8−2a`) and two sharp minima `(0, ±√((1+a)/2))` (sharpness `8+10a`); the
/// sign noise `x ∈ {±1}` multiplies a `b·w1²/2` term, so it vanishes on the
/// `w1 = 0` axis.
#[derive(Debug, Clone)]
pub struct SharpFlat2D {
    a: f64,
    b: f64,
    dist: TwoPointDistribution,
}

impl SharpFlat2D {
    pub fn new(a: f64, b: f64) -> Self {
        assert!(a > 0.0, "SharpFlat2D requires a > 0, got {a}");
        assert!(b > 0.0, "SharpFlat2D requires b > 0, got {b}");
        Self {
            a,
            b,
            dist: TwoPointDistribution::sign(),
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

impl StochasticObjective for SharpFlat2D {
    fn name(&self) -> &'static str {
        "sharpflat"
    }

    fn dim(&self) -> usize {
        2
    }

    fn noise(&self) -> &TwoPointDistribution {
        &self.dist
    }

    fn sample_loss(&self, w: &[f64], x: f64) -> f64 {
        let (w1, w2) = (w[0], w[1]);
        let (d, s) = (w1 - w2, w1 + w2);
        0.5 * (-d * d - s * s + d.powi(4) + s.powi(4) - 2.0 * self.a * w2 * w2
            + x * self.b * w1 * w1)
    }

    fn sample_grad(&self, w: &[f64], x: f64) -> Result<Vec<f64>, LandscapeError> {
        check_finite(w)?;
        let (w1, w2) = (w[0], w[1]);
        Ok(vec![
            -2.0 * w1 + 4.0 * w1.powi(3) + 12.0 * w1 * w2 * w2 + x * self.b * w1,
            -2.0 * w2 + 4.0 * w2.powi(3) + 12.0 * w1 * w1 * w2 - 2.0 * self.a * w2,
        ])
    }

    fn mean_loss(&self, w: &[f64]) -> f64 {
        // The noise term has zero mean, so it drops out.
        let (w1, w2) = (w[0], w[1]);
        let (d, s) = (w1 - w2, w1 + w2);
        0.5 * (-d * d - s * s + d.powi(4) + s.powi(4) - 2.0 * self.a * w2 * w2)
    }

    fn mean_grad(&self, w: &[f64]) -> Result<Vec<f64>, LandscapeError> {
        check_finite(w)?;
        let (w1, w2) = (w[0], w[1]);
        Ok(vec![
            -2.0 * w1 + 4.0 * w1.powi(3) + 12.0 * w1 * w2 * w2,
            -2.0 * w2 + 4.0 * w2.powi(3) + 12.0 * w1 * w1 * w2 - 2.0 * self.a * w2,
        ])
    }

    fn hessian(&self, w: &[f64]) -> Vec<Vec<f64>> {
        let (w1, w2) = (w[0], w[1]);
        let h11 = -2.0 + 12.0 * w1 * w1 + 12.0 * w2 * w2;
        let h22 = -2.0 - 2.0 * self.a + 12.0 * w1 * w1 + 12.0 * w2 * w2;
        let h12 = 24.0 * w1 * w2;
        vec![vec![h11, h12], vec![h12, h22]]
    }

    fn critical_point_catalog(&self) -> Vec<CatalogEntry> {
        let a = self.a;
        let mut entries = vec![CatalogEntry {
            label: "origin".into(),
            kind: CriticalKind::SaddleOrMax,
            locus: CriticalLocus::Point(vec![0.0, 0.0]),
            mean_loss: 0.0,
            sharpness: -4.0 - 2.0 * a,
        }];
        let f = 1.0 / 2.0f64.sqrt();
        for (label, w1) in [("flat+", f), ("flat-", -f)] {
            entries.push(CatalogEntry {
                label: label.into(),
                kind: CriticalKind::Minimum,
                locus: CriticalLocus::Point(vec![w1, 0.0]),
                mean_loss: -0.25,
                sharpness: 8.0 - 2.0 * a,
            });
        }
        let s = ((1.0 + a) / 2.0).sqrt();
        for (label, w2) in [("sharp+", s), ("sharp-", -s)] {
            entries.push(CatalogEntry {
                label: label.into(),
                kind: CriticalKind::Minimum,
                locus: CriticalLocus::Point(vec![0.0, w2]),
                mean_loss: -(1.0 + a) * (1.0 + a) / 4.0,
                sharpness: 8.0 + 10.0 * a,
            });
        }
        // Mixed stationary points (2w1²+6w2²=1, 6w1²+2w2²=1+a), saddles
        // between the wells; exist while both squares are positive.
        let w1sq = (2.0 + 3.0 * a) / 16.0;
        let w2sq = (2.0 - a) / 16.0;
        if w1sq > 0.0 && w2sq > 0.0 {
            let (u, v) = (w1sq.sqrt(), w2sq.sqrt());
            let loss = {
                let w = [u, v];
                self.mean_loss(&w)
            };
            let sharp = {
                let h = self.hessian(&[u, v]);
                h[0][0] + h[1][1]
            };
            for (label, p, q) in [
                ("mixed++", u, v),
                ("mixed+-", u, -v),
                ("mixed-+", -u, v),
                ("mixed--", -u, -v),
            ] {
                entries.push(CatalogEntry {
                    label: label.into(),
                    kind: CriticalKind::SaddleOrMax,
                    locus: CriticalLocus::Point(vec![p, q]),
                    mean_loss: loss,
                    sharpness: sharp,
                });
            }
        }
        entries
    }
}

/// Two-layer net `f(x) = w2·(w1·x)²` on the single input `x = 1` with label
/// `y ∈ {−1, 2}` (equal probability) under squared error, so with
/// `u = w2·w1²` the mean loss is `½(u+1)² + ½(u−2)²`.
///
/// The Hessian is evaluated by central differences of the mean gradient
/// (step 1e-4).
#[derive(Debug, Clone)]
pub struct ToyNetObjective {
    labels: TwoPointDistribution,
}

impl ToyNetObjective {
    pub fn new() -> Self {
        Self {
            labels: TwoPointDistribution::new(-1.0, 2.0, 0.5),
        }
    }

    pub const HESSIAN_STEP: f64 = 1e-4;
}

impl Default for ToyNetObjective {
    fn default() -> Self {
        Self::new()
    }
}

impl StochasticObjective for ToyNetObjective {
    fn name(&self) -> &'static str {
        "toynet"
    }

    fn dim(&self) -> usize {
        2
    }

    fn noise(&self) -> &TwoPointDistribution {
        &self.labels
    }

    fn sample_loss(&self, w: &[f64], y: f64) -> f64 {
        let u = w[1] * w[0] * w[0];
        (u - y) * (u - y)
    }

    fn sample_grad(&self, w: &[f64], y: f64) -> Result<Vec<f64>, LandscapeError> {
        check_finite(w)?;
        let (w1, w2) = (w[0], w[1]);
        let u = w2 * w1 * w1;
        let r = 2.0 * (u - y);
        Ok(vec![r * 2.0 * w1 * w2, r * w1 * w1])
    }

    fn mean_loss(&self, w: &[f64]) -> f64 {
        let u = w[1] * w[0] * w[0];
        0.5 * (u + 1.0) * (u + 1.0) + 0.5 * (u - 2.0) * (u - 2.0)
    }

    fn mean_grad(&self, w: &[f64]) -> Result<Vec<f64>, LandscapeError> {
        check_finite(w)?;
        let (w1, w2) = (w[0], w[1]);
        let u = w2 * w1 * w1;
        let r = 2.0 * u - 1.0;
        Ok(vec![r * 2.0 * w1 * w2, r * w1 * w1])
    }

    fn hessian(&self, w: &[f64]) -> Vec<Vec<f64>> {
        numerical_hessian(self, w, Self::HESSIAN_STEP)
    }

    fn critical_point_catalog(&self) -> Vec<CatalogEntry> {
        let min_samples: Vec<Vec<f64>> = [0.5f64, 0.75, 1.0, 1.5, 2.0]
            .iter()
            .enumerate()
            .map(|(i, &w2)| {
                let w1 = 1.0 / (2.0 * w2).sqrt();
                vec![if i % 2 == 0 { w1 } else { -w1 }, w2]
            })
            .collect();
        let min_sharp = {
            let h = self.hessian(&min_samples[0]);
            h[0][0] + h[1][1]
        };
        let saddle_samples: Vec<Vec<f64>> = [0.0, 0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&w2| vec![0.0, w2])
            .collect();
        let saddle_sharp = {
            let h = self.hessian(&saddle_samples[2]);
            h[0][0] + h[1][1]
        };
        vec![
            CatalogEntry {
                label: "global-min-manifold".into(),
                kind: CriticalKind::Minimum,
                locus: CriticalLocus::Manifold {
                    description: "w2*w1^2 = 1/2, w2 > 0".into(),
                    geometry: ManifoldGeometry::ToyNetGlobalMin,
                    samples: min_samples,
                },
                mean_loss: 2.25,
                sharpness: min_sharp,
            },
            CatalogEntry {
                label: "saddle-manifold".into(),
                kind: CriticalKind::SaddleOrMax,
                locus: CriticalLocus::Manifold {
                    description: "w1 = 0, w2 >= 0".into(),
                    geometry: ManifoldGeometry::ToyNetSaddle,
                    samples: saddle_samples,
                },
                mean_loss: 2.5,
                sharpness: saddle_sharp,
            },
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_landscapes() -> Vec<Box<dyn StochasticObjective>> {
        vec![
            Box::new(QuadraticObjective::new(-1.0)),
            Box::new(QuadraticObjective::new(2.0)),
            Box::new(QuarticObjective::new(-1.0)),
            Box::new(SharpFlat2D::new(1.0, 14.0)),
            Box::new(ToyNetObjective::new()),
        ]
    }

    #[test]
    fn two_point_mean_and_variance() {
        let d = TwoPointDistribution::curvature(-1.0);
        assert_eq!(d.mean(), -0.5);
        assert_relative_eq!(d.variance(), 2.25, max_relative = 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 0..20 {
            let a = -2.0 + 4.0 * (k as f64 + 0.37) / 20.0;
            assert_relative_eq!(
                TwoPointDistribution::curvature(a).mean(),
                a / 2.0,
                epsilon = 1e-12
            );
        }
        let _ = rng.random::<f64>();
    }

    #[test]
    fn sample_noise_degenerate_and_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let point = TwoPointDistribution::point_mass(3.5);
        for _ in 0..100 {
            assert_eq!(point.sample(&mut rng), 3.5);
        }
        // atoms {1, -2}: empirical mean over 1e6 draws within 3 sigma of -0.5
        let d = TwoPointDistribution::curvature(-1.0);
        let n = 1_000_000;
        let mean = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
        let three_sigma = 3.0 * d.variance().sqrt() / (n as f64).sqrt();
        assert!(
            (mean + 0.5).abs() < three_sigma,
            "empirical mean {mean} outside 3 sigma of -0.5"
        );
    }

    #[test]
    fn sample_grad_examples() {
        let quad = QuadraticObjective::new(-1.0);
        assert_eq!(quad.sample_grad(&[3.0], 1.0).unwrap(), vec![3.0]);

        let sf = SharpFlat2D::new(1.0, 14.0);
        let g = sf.sample_grad(&[1.0, 0.0], 1.0).unwrap();
        assert_relative_eq!(g[0], 16.0, epsilon = 1e-12);
        assert_relative_eq!(g[1], 0.0, epsilon = 1e-12);

        let tn = ToyNetObjective::new();
        for w2 in [-1.0, 0.0, 0.5, 2.0] {
            for y in [-1.0, 2.0] {
                assert_eq!(tn.sample_grad(&[0.0, w2], y).unwrap(), vec![0.0, 0.0]);
            }
        }

        assert!(quad.sample_grad(&[f64::INFINITY], 1.0).is_err());
        assert!(quad.sample_grad(&[f64::NAN], 1.0).is_err());
    }

    #[test]
    fn mean_ops_examples() {
        let quad = QuadraticObjective::new(-1.0);
        assert_eq!(quad.mean_grad(&[1.0]).unwrap(), vec![-0.5]);

        let tn = ToyNetObjective::new();
        assert_relative_eq!(tn.mean_loss(&[0.0, 0.5]), 2.5, epsilon = 1e-12);
        let w1 = 1.0 / 2.0f64.sqrt();
        assert_relative_eq!(tn.mean_loss(&[w1, 1.0]), 2.25, epsilon = 1e-12);
    }

    #[test]
    fn hessian_examples() {
        let sf = SharpFlat2D::new(1.0, 14.0);
        let h = sf.hessian(&[1.0 / 2.0f64.sqrt(), 0.0]);
        assert_relative_eq!(h[0][0], 4.0, epsilon = 1e-12);
        assert_relative_eq!(h[1][1], 4.0 - 2.0 * sf.a(), epsilon = 1e-12);

        let quad = QuadraticObjective::new(-0.8);
        for w in [-3.0, 0.0, 2.5] {
            assert_eq!(quad.hessian(&[w])[0][0], -0.4);
        }
    }

    #[test]
    fn toynet_hessian_matches_loss_based_oracle() {
        // Independent oracle: second differences of the mean loss itself.
        let tn = ToyNetObjective::new();
        let h = 1e-4;
        for w in [[1.0, 0.0], [0.5, 0.0], [2.0, 0.0], [0.7, 0.3], [-1.2, 0.8]] {
            let hess = tn.hessian(&w);
            for i in 0..2 {
                for j in 0..2 {
                    let oracle = if i == j {
                        let mut wp = w;
                        let mut wm = w;
                        wp[i] += h;
                        wm[i] -= h;
                        (tn.mean_loss(&wp) - 2.0 * tn.mean_loss(&w) + tn.mean_loss(&wm)) / (h * h)
                    } else {
                        let mut wpp = w;
                        let mut wpm = w;
                        let mut wmp = w;
                        let mut wmm = w;
                        wpp[i] += h;
                        wpp[j] += h;
                        wpm[i] += h;
                        wpm[j] -= h;
                        wmp[i] -= h;
                        wmp[j] += h;
                        wmm[i] -= h;
                        wmm[j] -= h;
                        (tn.mean_loss(&wpp) - tn.mean_loss(&wpm) - tn.mean_loss(&wmp)
                            + tn.mean_loss(&wmm))
                            / (4.0 * h * h)
                    };
                    let scale = oracle.abs().max(hess[i][j].abs()).max(1.0);
                    assert!(
                        (hess[i][j] - oracle).abs() / scale < 1e-6,
                        "H[{i}][{j}] at {w:?}: {} vs oracle {}",
                        hess[i][j],
                        oracle
                    );
                }
            }
        }
    }

    #[test]
    fn sharpness_examples_and_error() {
        let sf = SharpFlat2D::new(1.0, 14.0);
        let f = 1.0 / 2.0f64.sqrt();
        assert_relative_eq!(sharpness(&sf, &[f, 0.0]).unwrap(), 6.0, epsilon = 1e-9);
        assert_relative_eq!(sharpness(&sf, &[-f, 0.0]).unwrap(), 6.0, epsilon = 1e-9);
        assert_relative_eq!(sharpness(&sf, &[0.0, 1.0]).unwrap(), 18.0, epsilon = 1e-9);
        assert_relative_eq!(sharpness(&sf, &[0.0, -1.0]).unwrap(), 18.0, epsilon = 1e-9);

        let quad = QuadraticObjective::new(2.0);
        assert_relative_eq!(sharpness(&quad, &[0.0]).unwrap(), 1.0, epsilon = 1e-12);

        assert!(matches!(
            sharpness(&quad, &[0.5]),
            Err(LandscapeError::NotACriticalPoint { .. })
        ));
    }

    #[test]
    fn catalog_examples() {
        let quad = QuadraticObjective::new(-1.0);
        let cat = quad.critical_point_catalog();
        assert_eq!(cat.len(), 1);
        assert_eq!(cat[0].kind, CriticalKind::SaddleOrMax);
        assert_eq!(cat[0].mean_loss, 0.0);
        assert_eq!(cat[0].sharpness, -0.5);

        let quartic = QuarticObjective::new(-1.0);
        let cat = quartic.critical_point_catalog();
        let minima: Vec<f64> = cat
            .iter()
            .filter(|e| e.kind == CriticalKind::Minimum)
            .map(|e| match &e.locus {
                CriticalLocus::Point(p) => p[0],
                _ => unreachable!(),
            })
            .collect();
        let r = 0.5f64.sqrt();
        assert!(minima.iter().any(|&w| (w - r).abs() < 1e-12));
        assert!(minima.iter().any(|&w| (w + r).abs() < 1e-12));
        assert!(cat
            .iter()
            .any(|e| e.kind == CriticalKind::SaddleOrMax && e.label == "origin"));

        let sf = SharpFlat2D::new(1.0, 14.0);
        let minima = sf
            .critical_point_catalog()
            .into_iter()
            .filter(|e| e.kind == CriticalKind::Minimum)
            .count();
        assert_eq!(minima, 4);
    }

    #[test]
    fn catalog_points_have_vanishing_mean_grad() {
        for obj in all_landscapes() {
            for entry in obj.critical_point_catalog() {
                for p in entry.probe_points() {
                    let g = obj.mean_grad(&p).unwrap();
                    assert!(
                        l2_norm(&g) <= 1e-10,
                        "{}/{}: |grad| = {:e} at {:?}",
                        obj.name(),
                        entry.label,
                        l2_norm(&g),
                        p
                    );
                }
            }
        }
    }

    #[test]
    fn mean_grad_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let h = 1e-5;
        for obj in all_landscapes() {
            for _ in 0..100 {
                let w: Vec<f64> = (0..obj.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let g = obj.mean_grad(&w).unwrap();
                for i in 0..obj.dim() {
                    let mut wp = w.clone();
                    let mut wm = w.clone();
                    wp[i] += h;
                    wm[i] -= h;
                    let fd = (obj.mean_loss(&wp) - obj.mean_loss(&wm)) / (2.0 * h);
                    let scale = g[i].abs().max(1.0);
                    assert!(
                        (fd - g[i]).abs() / scale < 1e-6,
                        "{}: grad[{i}] {} vs fd {} at {:?}",
                        obj.name(),
                        g[i],
                        fd,
                        w
                    );
                }
            }
        }
    }

    #[test]
    fn atom_average_of_sample_grad_is_mean_grad() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for obj in all_landscapes() {
            for _ in 0..50 {
                let w: Vec<f64> = (0..obj.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let mg = obj.mean_grad(&w).unwrap();
                let mut avg = vec![0.0; obj.dim()];
                for (x, p) in obj.noise().atoms() {
                    let g = obj.sample_grad(&w, x).unwrap();
                    for i in 0..obj.dim() {
                        avg[i] += p * g[i];
                    }
                }
                for i in 0..obj.dim() {
                    assert_relative_eq!(avg[i], mg[i], epsilon = 1e-12, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn sharpflat_sharpness_gap_is_12a() {
        for a in [0.1, 0.5, 1.0, 2.0, 3.7] {
            let sf = SharpFlat2D::new(a, 14.0);
            let cat = sf.critical_point_catalog();
            let flat = cat.iter().find(|e| e.label == "flat+").unwrap().sharpness;
            let sharp = cat.iter().find(|e| e.label == "sharp+").unwrap().sharpness;
            assert_relative_eq!(sharp - flat, 12.0 * a, epsilon = 1e-12);
            assert!(sharp > flat);
        }
    }

    #[test]
    fn toynet_manifold_distances() {
        let tn = ToyNetObjective::new();
        let cat = tn.critical_point_catalog();
        let global = cat.iter().find(|e| e.label == "global-min-manifold").unwrap();
        let saddle = cat.iter().find(|e| e.label == "saddle-manifold").unwrap();

        // Points on the manifolds are at distance ~0.
        for p in global.probe_points() {
            assert!(global.distance_to(&p) < 1e-6, "{p:?}");
        }
        assert_eq!(saddle.distance_to(&[0.0, 0.3]), 0.0);
        assert_eq!(saddle.distance_to(&[0.2, 0.5]), 0.2);
        assert_relative_eq!(
            saddle.distance_to(&[0.3, -0.4]),
            0.5,
            epsilon = 1e-12
        );
        // Off-manifold point: distance positive and below the naive sample gap.
        let d = global.distance_to(&[0.9, 0.7]);
        assert!(d > 0.01 && d < 0.3, "distance {d}");
    }
}
