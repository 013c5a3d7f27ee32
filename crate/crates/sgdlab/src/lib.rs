//! A laboratory for pathological stochastic-optimizer dynamics.
//!
//! The crate simulates constant-learning-rate GD/SGD/Adam/AMSGrad on a small
//! family of stochastic objectives whose minibatch noise vanishes at
//! stationary points, and checks the Monte-Carlo ensembles against exact
//! closed-form predictors: convergence to maxima in probability, arbitrarily
//! slow saddle escape, selection of sharp minima over flat ones, AMSGrad
//! trapped at a maximum, and continuous-time stationary densities.
//!
//! Layout:
//! * [`landscapes`] — sampled objectives with finite-atom noise laws.
//! * [`optimizers`] — the update rules as pure state transitions.
//! * [`ensemble`] — seeded parallel trajectory ensembles and observables.
//! * [`theory`] — the closed-form predictors the ensembles are tested against.
//! * [`audit`] — numerical certification that standard convergence
//!   assumptions fail on the toy-net objective.
//! * [`experiments`] — the named experiment drivers behind the CLI.

pub mod audit;
pub mod ensemble;
pub mod experiments;
pub mod landscapes;
pub mod optimizers;
pub mod report;
pub mod stats;
pub mod svg;
pub mod theory;

pub use ensemble::{
    classify_terminal, escape_probability, escape_rate_estimate, histogram, phase_sweep,
    run_ensemble, EnsembleConfig, EnsembleResult, PhaseFamily, RunStatus,
};
pub use landscapes::{
    sample_noise, sharpness, LandscapeSpec, QuadraticObjective, QuarticObjective, SharpFlat2D,
    StochasticObjective, ToyNetObjective, TwoPointDistribution,
};
pub use optimizers::{
    adam_step, amsgrad_step, gd_step, project, sgd_step, BoxConstraint, HyperParams,
    OptimizerState, UpdateRule,
};
