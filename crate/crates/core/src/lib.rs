//! Exponential-weighting aggregation of ordered linear smoothers in the
//! Gaussian sequence model `Y_i = mu_i + sigma xi_i`.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: data generation, linear estimates, exact risk and the
//!   unbiased risk estimate (URE).
//! * [`families`]: ordered multiplier families (Tikhonov, Pinsker, spectral
//!   cut-off, Landweber, custom), their prior weights and regularity constants.
//! * [`estimators`]: the URE minimizer, exponential weights, the aggregate and
//!   its Stein divergence.
//! * [`experiments`]: Monte Carlo risk evaluation and the oracle-inequality
//!   checks built on it.
//! * [`cli`]: the configuration-driven command line behind the `expweight` binary.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod families;
pub mod model;
pub mod noise;
pub mod summation;

pub use error::{Error, Result};

/// Library version echoed into every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
