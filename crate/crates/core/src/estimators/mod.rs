//! Data-driven estimators built on a multiplier family: the URE minimizer and
//! the exponentially weighted aggregate, plus the quantities used to analyse
//! them (Stein divergence, the `h_eps` index, entropy and KL terms).

pub(crate) mod aggregate;
mod diagnostics;
pub(crate) mod weights;

pub use aggregate::{aggregate, aggregate_divergence, AggregateResult};
pub use diagnostics::{entropy_term, h_eps_hat, h_eps_index, kl_divergence};
pub use weights::{exp_weights, ure_minimizer, ure_values, WeightProfile};
