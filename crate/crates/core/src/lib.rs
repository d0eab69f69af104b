//! Generalized semi-supervised elastic-net.
//!
//! Fits sparse linear and logistic models from labeled data plus a regularization
//! term built from unlabeled data. The unlabeled rows enter through a transform of
//! their centered SVD and their mean shift, and the resulting elastic-net problem is
//! solved with FISTA and backtracking.
//!
//! Pipeline: [`data`] builds a centered (optionally scaled) [`Dataset`], [`transform`]
//! turns the unlabeled block into the regularization matrix, [`loss`] assembles the
//! composite risk, [`solver`] minimizes it, and [`model`] wraps everything into
//! fit/predict. [`search`], [`simulate`], [`metrics`] and [`bench`] reproduce the
//! tuning and simulation protocol; [`cli`] exposes it all on the command line.

pub mod bench;
pub mod cli;
pub mod data;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod report;
pub mod search;
pub mod simulate;
pub mod solver;
pub mod transform;

pub use data::{Dataset, Preprocess, RawTable, ResponseKind};
pub use error::{Error, Result};
pub use loss::{CompositeLoss, LossFamily};
pub use model::{FittedModel, Fitter, Hyperparams, PredictType};
pub use solver::{FistaConfig, SolveReport};
pub use transform::ProjectionMode;

/// Version string embedded in every serialized artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
