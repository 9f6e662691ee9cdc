//! Monte Carlo risk evaluation and empirical checks of the oracle
//! inequalities for the exponentially weighted aggregate.
//!
//! Replication `r` of a scenario draws its noise from stream `r` of a
//! generator keyed by the scenario seed, so results do not depend on how
//! replications are scheduled across threads.

mod psi;
mod runner;
mod scenario;
mod stats;
mod sweep;
mod verify;

pub use psi::{log_remainder_bound, sqrt_remainder_shape, PsiFunction};
pub use runner::{
    run_scenario, run_scenario_with, Check, HEpsDiagnostic, ReplicationRecord, RiskReport, RngEcho, RunOptions,
    ScenarioRun, Verdict, CONFIDENCE, MIN_VERDICT_REPLICATIONS,
};
pub use scenario::{FamilySpec, GridSpec, MeanSpec, Scenario, ScenarioContext, Spacing, SpectrumSpec, DEFAULT_BETA};
pub use stats::{spearman, MeanSe};
pub use sweep::{remainder_sweep, scales_for_targets, verify_log_remainder_bound, RemainderSweep, SweepRow, SweepVerdict};
pub use verify::{
    diagnose_h_eps, member_kl_bound, verify_calibration, verify_kl_oracle_bound, verify_log_remainder, verify_stein_identity,
    verify_weighted_ure_bound,
};
