//! Stochastic model-based minimization of weakly convex functions.
//!
//! The crate provides the proximal stochastic subgradient method and the
//! general model-based method (linear, prox-linear and proximal-point model
//! families), concrete finite-sum problems with exact closed-form steps,
//! Moreau-envelope stationarity measurement, and brute-force oracles used to
//! validate the closed forms.

pub mod algorithms;
pub mod error;
pub mod linalg;
pub mod models;
pub mod oracle;
pub mod problems;
pub mod quartic;
pub mod regularizer;
pub mod rng;
pub mod stationarity;

pub use algorithms::{
    make_schedule, run_model_based, run_psg, select_iterate, weighted_average, AveragingMode, RunOptions, RunRecord,
    Schedule, ScheduleKind,
};
pub use error::{Error, Result};
pub use linalg::DenseVector;
pub use models::{model_step, model_value, ModelFamily, TheoreticalConstants};
pub use problems::{ProblemInstance, ProblemKind, SubgradientSample};
pub use regularizer::Regularizer;
pub use rng::RngStream;
pub use stationarity::{moreau_envelope, prox_gradient_mapping, EnvelopeReport, SmoothObjective};
