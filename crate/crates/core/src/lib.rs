//! Misspecified Bayesian learning with Bayes-factor model switching.
//!
//! The crate models an agent who repeatedly chooses actions, observes
//! outcomes drawn from an unknown action-dependent distribution, and
//! interprets them through finite-parameter subjective models. A *switcher*
//! holds an initial model plus competing models and swaps models when a
//! Bayes factor exceeds a threshold; a *dogmatic modeler* never swaps.
//!
//! Modules:
//! - [`env`] — actions, outcome distributions, utilities, the true DGP.
//! - [`model`] — subjective models, beliefs, likelihoods, KL machinery, and
//!   competing-model constructors.
//! - [`policy`] — myopic best responses and belief-grid value iteration.
//! - [`dynamics`] — path simulation and the seeded parallel Monte Carlo
//!   harness (rayon by default; disable the `parallel` feature for a purely
//!   sequential build).
//! - [`equilibrium`] — Berk-Nash equilibrium enumeration and classification.
//! - [`robustness`] — global/constrained robustness verdicts with witnesses.
//! - [`scenarios`] — builders for the worked examples and applications.

pub mod dynamics;
pub mod env;
pub mod equilibrium;
pub mod model;
pub mod numeric;
pub mod policy;
pub mod robustness;
pub mod scenarios;
pub mod simplex;

use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("linear program: {0}")]
    Lp(String),
    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
