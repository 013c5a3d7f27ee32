//! The four update rules — GD, minibatch SGD, Adam, AMSGrad — as pure state
//! transitions, plus componentwise box projection.
//!
//! AMSGrad follows the usual recursion with `m0 = v0 = 0` and no numerical
//! smoothing constant in the denominator: `w' = w − λ·m'/√v̂'`. A zero
//! preconditioner with nonzero momentum is therefore a hard error rather than
//! a silent ε-fix; with a zero momentum component the coordinate simply does
//! not move. Adam is the same recursion with `v̂' ← v'` (no running max, no
//! bias correction).

use crate::landscapes::StochasticObjective;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StepError {
    /// The update produced a non-finite parameter; carries the step index.
    #[error("non-finite iterate at step {step}")]
    NonFinite { step: u64 },
    /// `v̂ = 0` while the momentum is nonzero; dividing would be 0/0-free but
    /// unbounded. Avoided in practice by initializing `w0 ≠ 0`.
    #[error("zero preconditioner with nonzero momentum at step {step} (component {component})")]
    ZeroPreconditioner { step: u64, component: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum UpdateRule {
    #[value(name = "gd")]
    Gd,
    #[value(name = "sgd")]
    Sgd,
    #[value(name = "adam")]
    Adam,
    #[value(name = "amsgrad")]
    AmsGrad,
}

impl UpdateRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            UpdateRule::Gd => "gd",
            UpdateRule::Sgd => "sgd",
            UpdateRule::Adam => "adam",
            UpdateRule::AmsGrad => "amsgrad",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub rule: UpdateRule,
    pub learning_rate: f64,
    /// Momentum coefficient; ignored by GD/SGD.
    pub beta1: f64,
    /// Preconditioner coefficient; ignored by GD/SGD.
    pub beta2: f64,
}

impl HyperParams {
    pub fn sgd(learning_rate: f64) -> Self {
        Self {
            rule: UpdateRule::Sgd,
            learning_rate,
            beta1: 0.0,
            beta2: 0.0,
        }
    }

    pub fn gd(learning_rate: f64) -> Self {
        Self {
            rule: UpdateRule::Gd,
            ..Self::sgd(learning_rate)
        }
    }

    pub fn adam(learning_rate: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            rule: UpdateRule::Adam,
            learning_rate,
            beta1,
            beta2,
        }
    }

    pub fn amsgrad(learning_rate: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            rule: UpdateRule::AmsGrad,
            learning_rate,
            beta1,
            beta2,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.learning_rate > 0.0) && !matches!(self.rule, UpdateRule::Gd | UpdateRule::Sgd) {
            return Err(format!("learning rate must be > 0, got {}", self.learning_rate));
        }
        if self.learning_rate < 0.0 || !self.learning_rate.is_finite() {
            return Err(format!("learning rate must be >= 0, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return Err(format!("beta1 must lie in [0, 1), got {}", self.beta1));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return Err(format!("beta2 must lie in [0, 1), got {}", self.beta2));
        }
        Ok(())
    }
}

/// Parameter vector plus the adaptive-method accumulators.
///
/// `m = v = v̂ = 0` at `t = 0`; under AMSGrad `v̂` is componentwise
/// non-decreasing along any trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub w: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub v_hat: Vec<f64>,
    pub t: u64,
}

impl OptimizerState {
    pub fn new(w: Vec<f64>) -> Self {
        let d = w.len();
        Self {
            w,
            m: vec![0.0; d],
            v: vec![0.0; d],
            v_hat: vec![0.0; d],
            t: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }
}

/// Componentwise bounds `lo ≤ w ≤ hi`, enforced by clamping after each update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxConstraint {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub enabled: bool,
}

impl BoxConstraint {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(
            lo.iter().zip(&hi).all(|(a, b)| a <= b),
            "box bounds must satisfy lo <= hi componentwise"
        );
        Self { lo, hi, enabled: true }
    }

    /// `[-r, r]` in every coordinate.
    pub fn symmetric(dim: usize, r: f64) -> Self {
        Self::new(vec![-r; dim], vec![r; dim])
    }

    pub fn disabled(dim: usize) -> Self {
        Self {
            lo: vec![f64::NEG_INFINITY; dim],
            hi: vec![f64::INFINITY; dim],
            enabled: false,
        }
    }
}

fn finish(state: OptimizerState) -> Result<OptimizerState, StepError> {
    if state.w.iter().all(|v| v.is_finite()) {
        Ok(state)
    } else {
        Err(StepError::NonFinite { step: state.t })
    }
}

pub(crate) fn sgd_step_in_place(state: &mut OptimizerState, g_hat: &[f64], learning_rate: f64) {
    for (w, g) in state.w.iter_mut().zip(g_hat) {
        *w -= learning_rate * g;
    }
    state.t += 1;
}

/// `w' = w − λ·ĝ`; accumulators untouched.
pub fn sgd_step(
    state: &OptimizerState,
    g_hat: &[f64],
    learning_rate: f64,
) -> Result<OptimizerState, StepError> {
    let mut next = state.clone();
    sgd_step_in_place(&mut next, g_hat, learning_rate);
    finish(next)
}

/// Full-gradient descent: the SGD update with the exact mean gradient.
pub fn gd_step(
    state: &OptimizerState,
    obj: &dyn StochasticObjective,
    learning_rate: f64,
) -> Result<OptimizerState, StepError> {
    let g = obj
        .mean_grad(&state.w)
        .map_err(|_| StepError::NonFinite { step: state.t })?;
    sgd_step(state, &g, learning_rate)
}

pub(crate) fn adaptive_step_in_place(
    state: &mut OptimizerState,
    g_hat: &[f64],
    hp: &HyperParams,
    keep_max: bool,
) -> Result<(), StepError> {
    let t_next = state.t + 1;
    for i in 0..state.w.len() {
        let g = g_hat[i];
        state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * g;
        state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * g * g;
        let pre = if keep_max {
            state.v_hat[i] = state.v_hat[i].max(state.v[i]);
            state.v_hat[i]
        } else {
            state.v[i]
        };
        if pre == 0.0 {
            if state.m[i] != 0.0 {
                return Err(StepError::ZeroPreconditioner {
                    step: t_next,
                    component: i,
                });
            }
            // m' = 0 as well: the coordinate stays put.
        } else {
            state.w[i] -= hp.learning_rate * state.m[i] / pre.sqrt();
        }
    }
    state.t = t_next;
    if state.w.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StepError::NonFinite { step: t_next })
    }
}

/// AMSGrad step: `m' = β1·m + (1−β1)·ĝ`, `v' = β2·v + (1−β2)·ĝ²`,
/// `v̂' = max(v̂, v')`, `w' = w − λ·m'/√v̂'` componentwise.
pub fn amsgrad_step(
    state: &OptimizerState,
    g_hat: &[f64],
    hp: &HyperParams,
) -> Result<OptimizerState, StepError> {
    let mut next = state.clone();
    adaptive_step_in_place(&mut next, g_hat, hp, true)?;
    Ok(next)
}

/// Adam step: AMSGrad with `v̂' ← v'`; the `v_hat` accumulator is unused and
/// stays at zero.
pub fn adam_step(
    state: &OptimizerState,
    g_hat: &[f64],
    hp: &HyperParams,
) -> Result<OptimizerState, StepError> {
    let mut next = state.clone();
    adaptive_step_in_place(&mut next, g_hat, hp, false)?;
    Ok(next)
}

pub(crate) fn project_in_place(state: &mut OptimizerState, box_: &BoxConstraint) {
    if !box_.enabled {
        return;
    }
    for i in 0..state.w.len() {
        state.w[i] = state.w[i].clamp(box_.lo[i], box_.hi[i]);
    }
}

/// Clamp `w` componentwise into the box; accumulators untouched.
pub fn project(state: &OptimizerState, box_: &BoxConstraint) -> OptimizerState {
    let mut next = state.clone();
    project_in_place(&mut next, box_);
    next
}
