use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::psi::{log_remainder_bound, sqrt_remainder_shape, PsiFunction};
use super::scenario::{Scenario, ScenarioContext};
use super::stats::MeanSe;
use super::verify;
use crate::error::{Error, Result};
use crate::estimators::aggregate::{divergence_with, mean_multiplier, weighted_ure};
use crate::estimators::weights::ure_from_squares;
use crate::estimators::{h_eps_index, WeightProfile};
use crate::families::{check_condition, ConditionReport};
use crate::model::{generate_observation, oracle_risk, risk_unchecked};
use crate::noise::replication_rng;
use crate::summation::blocked_sum;

/// Half-width of every Monte Carlo verdict, in standard errors.
pub const CONFIDENCE: f64 = 4.0;
/// Verdicts are only issued from at least this many replications.
pub const MIN_VERDICT_REPLICATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// Risk of the aggregate against its expected weighted URE.
    WeightedUre,
    /// Risk of the aggregate against the KL oracle bound, both displays.
    KlOracle,
    /// Remainder of the aggregate against `2 beta sigma^2 log(x + Psi(x))`.
    LogRemainder,
    /// Stein's risk estimate of the aggregate against its Monte Carlo risk.
    Stein,
    /// Single-member families only: URE and loss against the exact risk.
    Calibration,
}

impl Check {
    pub const ALL: [Check; 5] = [Check::WeightedUre, Check::KlOracle, Check::LogRemainder, Check::Stein, Check::Calibration];

    pub fn name(self) -> &'static str {
        match self {
            Check::WeightedUre => "weighted_ure",
            Check::KlOracle => "kl_oracle",
            Check::LogRemainder => "log_remainder",
            Check::Stein => "stein",
            Check::Calibration => "calibration",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown check `{name}`")))
    }
}

/// One inequality checked at `CONFIDENCE` standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: Check,
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub se: f64,
    /// Slack left by the inequality; negative on failure.
    pub margin: f64,
    pub passed: bool,
    pub theory_applicable: bool,
}

impl Verdict {
    /// `lhs <= rhs + CONFIDENCE * se`.
    pub fn upper(check: Check, label: impl Into<String>, lhs: f64, rhs: f64, se: f64, theory_applicable: bool) -> Self {
        let margin = rhs + CONFIDENCE * se - lhs;
        Self { check, label: label.into(), lhs, rhs, se, margin, passed: margin >= 0.0, theory_applicable }
    }

    /// `|lhs - rhs| <= CONFIDENCE * se`.
    pub fn two_sided(check: Check, label: impl Into<String>, lhs: f64, rhs: f64, se: f64) -> Self {
        let margin = CONFIDENCE * se - (lhs - rhs).abs();
        Self { check, label: label.into(), lhs, rhs, se, margin, passed: margin >= 0.0, theory_applicable: true }
    }

    /// Only failures inside the theory's range count against a run.
    pub fn counts_as_failure(&self) -> bool {
        !self.passed && self.theory_applicable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// `C` of the remainder correction `Psi`.
    pub psi_c: f64,
    /// `eps` for the `h_eps` diagnostic; `None` means `1 / (10 beta)`.
    pub eps: Option<f64>,
    /// Compute the aggregate's divergence (needed by the Stein check).
    pub divergence: bool,
    /// Random simplex points for the first KL display.
    pub sampled_lambdas: usize,
    pub checks: Vec<Check>,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { psi_c: 1.0, eps: None, divergence: true, sampled_lambdas: 100, checks: Check::ALL.to_vec(), threads: None }
    }
}

/// Per-replication quantities, all on the same draw of `Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationRecord {
    pub loss_ew: f64,
    pub loss_ure: f64,
    pub weighted_ure: f64,
    /// Stein estimate of the aggregate's risk; `NaN` when divergence is off.
    pub stein_ew: f64,
    /// `sigma^2 ||h_hat||^2`
    pub ure_sq_norm: f64,
    /// `sigma^2 ||h_eps||^2`
    pub h_eps_sq_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HEpsDiagnostic {
    pub eps: f64,
    /// Monte Carlo `sigma^2 E ||h_eps||^2`.
    pub mean_sq_norm: MeanSe,
    /// `r^H / (1 - 5 beta eps)`, the constant-free part of the bound.
    pub reference: f64,
    /// The constant that would make the bound tight at the Monte Carlo mean.
    pub empirical_c: f64,
}

/// Echo of the noise scheme: replication `r` uses stream `r` of ChaCha8
/// keyed by `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngEcho {
    pub generator: String,
    pub seed: u64,
    pub streams: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub scenario: Scenario,
    pub library_version: String,
    pub rng: RngEcho,
    pub family_size: usize,
    pub merged_members: usize,
    pub oracle_risk: f64,
    pub oracle_index: usize,
    pub mc_risk_ew: MeanSe,
    pub mc_risk_ure: MeanSe,
    pub weighted_ure_mean: MeanSe,
    /// Paired `||mu_bar - mu||^2 - weighted URE`.
    pub ew_minus_weighted_ure: MeanSe,
    /// Paired Stein estimate minus loss of the aggregate; absent without divergence.
    pub stein_minus_loss: Option<MeanSe>,
    pub remainder_ew: f64,
    pub remainder_ure: f64,
    pub psi: PsiFunction,
    pub bound_log: f64,
    pub bound_sqrt_shape: f64,
    pub h_eps: Option<HEpsDiagnostic>,
    pub condition: ConditionReport,
    pub theory_applicable: bool,
    pub verdicts: Vec<Verdict>,
}

impl RiskReport {
    pub fn passed(&self) -> bool {
        !self.verdicts.iter().any(Verdict::counts_as_failure)
    }
}

/// A finished Monte Carlo run with everything needed by the verdicts.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub scenario: Scenario,
    pub context: ScenarioContext,
    pub options: RunOptions,
    pub condition: ConditionReport,
    pub member_risks: Vec<f64>,
    pub oracle_risk: f64,
    pub oracle_index: usize,
    pub eps: f64,
    pub records: Vec<ReplicationRecord>,
}

fn replicate(scenario: &Scenario, ctx: &ScenarioContext, eps: f64, divergence: bool, r: usize) -> Result<ReplicationRecord> {
    let (family, priors) = (&ctx.family, &ctx.priors);
    let sigma = scenario.sigma;
    let s2 = sigma * sigma;
    let n = scenario.n;
    let y = generate_observation(&ctx.mu, sigma, &mut replication_rng(scenario.seed, r as u64))?;
    let yv = y.values();
    let mu = ctx.mu.values();
    let y2: Vec<f64> = yv.iter().map(|v| v * v).collect();
    let ure = ure_from_squares(&y2, sigma, family);
    let profile = WeightProfile::build(ure, priors.log_weights(), family.l1_norms(), scenario.beta, sigma, None)?;

    let h_bar = mean_multiplier(family, profile.weights());
    let loss_ew = blocked_sum(n, |i| (h_bar[i] * yv[i] - mu[i]).powi(2));
    let best = profile.argmin_index();
    let h_hat = family.member(best).values();
    let loss_ure = blocked_sum(n, |i| (h_hat[i] * yv[i] - mu[i]).powi(2));

    let stein_ew = if divergence {
        let div = divergence_with(family, &profile, yv, &h_bar);
        let resid = blocked_sum(n, |i| (h_bar[i] * yv[i] - yv[i]).powi(2));
        resid + 2.0 * s2 * div - s2 * n as f64
    } else {
        f64::NAN
    };
    let eps_index = h_eps_index(profile.ure_values(), family.sq_norms(), best, scenario.beta, sigma, eps)?;
    Ok(ReplicationRecord {
        loss_ew,
        loss_ure,
        weighted_ure: weighted_ure(&profile),
        stein_ew,
        ure_sq_norm: s2 * family.sq_norms()[best],
        h_eps_sq_norm: s2 * family.sq_norms()[eps_index],
    })
}

impl ScenarioRun {
    pub fn execute(scenario: &Scenario, options: &RunOptions) -> Result<Self> {
        if scenario.replications < 2 {
            return Err(Error::InvalidParameter(format!(
                "scenario `{}` needs at least 2 replications, got {}",
                scenario.name, scenario.replications
            )));
        }
        let context = scenario.context()?;
        let eps = options.eps.unwrap_or(1.0 / (10.0 * scenario.beta));
        if !(eps > 0.0 && eps < 1.0 / (5.0 * scenario.beta)) {
            return Err(Error::InvalidParameter(format!("eps = {eps} is outside (0, 1/(5 beta))")));
        }
        let condition = check_condition(&context.family);
        let (oracle_risk, oracle_index) = oracle_risk(&context.family, &context.mu, scenario.sigma)?;
        let member_risks: Vec<f64> = context
            .family
            .members()
            .iter()
            .map(|h| risk_unchecked(h.values(), context.mu.values(), scenario.sigma))
            .collect();

        let work = || -> Result<Vec<ReplicationRecord>> {
            (0..scenario.replications)
                .into_par_iter()
                .map(|r| replicate(scenario, &context, eps, options.divergence, r))
                .collect()
        };
        let records = match options.threads {
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot start {t} worker threads: {e}")))?
                .install(work)?,
            None => work()?,
        };
        Ok(Self {
            scenario: scenario.clone(),
            context,
            options: options.clone(),
            condition,
            member_risks,
            oracle_risk,
            oracle_index,
            eps,
            records,
        })
    }

    pub fn stat<F: Fn(&ReplicationRecord) -> f64>(&self, f: F) -> MeanSe {
        MeanSe::from_fn(self.records.len(), |r| f(&self.records[r]))
    }

    pub fn psi(&self) -> Result<PsiFunction> {
        PsiFunction::new(self.options.psi_c, self.scenario.beta)
    }

    pub fn h_eps(&self) -> HEpsDiagnostic {
        let mean_sq_norm = self.stat(|r| r.h_eps_sq_norm);
        let shrink = 1.0 - 5.0 * self.scenario.beta * self.eps;
        let reference = self.oracle_risk / shrink;
        let s2 = self.scenario.sigma * self.scenario.sigma;
        HEpsDiagnostic { eps: self.eps, mean_sq_norm, reference, empirical_c: (mean_sq_norm.mean - reference) * shrink * self.eps / s2 }
    }

    pub fn report(&self) -> Result<RiskReport> {
        let s = &self.scenario;
        let psi = self.psi()?;
        let mc_risk_ew = self.stat(|r| r.loss_ew);
        let mc_risk_ure = self.stat(|r| r.loss_ure);
        let stein_minus_loss = self.options.divergence.then(|| self.stat(|r| r.stein_ew - r.loss_ew));

        let mut verdicts = Vec::new();
        if s.replications >= MIN_VERDICT_REPLICATIONS {
            let selected = |c: Check| self.options.checks.contains(&c);
            if selected(Check::WeightedUre) {
                verdicts.push(verify::verify_weighted_ure_bound(self));
            }
            if selected(Check::KlOracle) {
                verdicts.extend(verify::verify_kl_oracle_bound(self, self.options.sampled_lambdas)?);
            }
            if selected(Check::LogRemainder) {
                verdicts.push(verify::verify_log_remainder(self)?);
            }
            if selected(Check::Stein) && self.options.divergence {
                verdicts.push(verify::verify_stein_identity(self));
            }
            if selected(Check::Calibration) && self.context.family.len() == 1 {
                verdicts.extend(verify::verify_calibration(self));
            }
        } else {
            log::warn!(
                "scenario `{}`: {} replications are too few for verdicts (need {MIN_VERDICT_REPLICATIONS})",
                s.name,
                s.replications
            );
        }

        Ok(RiskReport {
            scenario: s.clone(),
            library_version: crate::VERSION.to_string(),
            rng: RngEcho {
                generator: "chacha8".into(),
                seed: s.seed,
                streams: format!("replication r uses stream r, r = 0..{}", s.replications),
            },
            family_size: self.context.family.len(),
            merged_members: self.context.family.merged(),
            oracle_risk: self.oracle_risk,
            oracle_index: self.oracle_index,
            remainder_ew: mc_risk_ew.mean - self.oracle_risk,
            remainder_ure: mc_risk_ure.mean - self.oracle_risk,
            mc_risk_ew,
            mc_risk_ure,
            weighted_ure_mean: self.stat(|r| r.weighted_ure),
            ew_minus_weighted_ure: self.stat(|r| r.loss_ew - r.weighted_ure),
            stein_minus_loss,
            psi,
            bound_log: log_remainder_bound(&psi, self.oracle_risk, s.sigma),
            bound_sqrt_shape: sqrt_remainder_shape(self.oracle_risk, s.sigma),
            h_eps: Some(self.h_eps()),
            condition: self.condition.clone(),
            theory_applicable: s.theory_applicable(),
            verdicts,
        })
    }
}

/// Runs `scenario` with default options and returns its report.
pub fn run_scenario(scenario: &Scenario) -> Result<RiskReport> {
    run_scenario_with(scenario, &RunOptions::default())
}

pub fn run_scenario_with(scenario: &Scenario, options: &RunOptions) -> Result<RiskReport> {
    if !scenario.theory_applicable() {
        log::warn!("scenario `{}`: beta = {} is below 4; verdicts are flagged theory-not-applicable", scenario.name, scenario.beta);
    }
    ScenarioRun::execute(scenario, options)?.report()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::scenario::{FamilySpec, GridSpec, MeanSpec, Spacing, SpectrumSpec};

    fn scenario(mean: MeanSpec, family: FamilySpec, replications: usize) -> Scenario {
        Scenario { name: "t".into(), n: 3, sigma: 1.0, mean, family, beta: 4.0, replications, seed: 3 }
    }

    #[test]
    fn zero_mean_zero_family_has_zero_risk() {
        let s = scenario(MeanSpec::Zero, FamilySpec::Custom { members: vec![vec![0.0; 3]] }, 200);
        let rep = run_scenario(&s).unwrap();
        assert_eq!((rep.oracle_risk, rep.mc_risk_ew.mean, rep.mc_risk_ure.mean), (0.0, 0.0, 0.0));
        assert_eq!(rep.mc_risk_ew.se, 0.0);
        assert!(rep.passed(), "{:?}", rep.verdicts);
    }

    #[test]
    fn remainder_is_mean_minus_oracle() {
        let s = scenario(MeanSpec::Constant { amplitude: 1.0 }, FamilySpec::Cutoff { cuts: Some(vec![0, 1, 2, 3]), step: None }, 300);
        let rep = run_scenario(&s).unwrap();
        assert_eq!(rep.remainder_ew, rep.mc_risk_ew.mean - rep.oracle_risk);
        assert_eq!(rep.remainder_ure, rep.mc_risk_ure.mean - rep.oracle_risk);
        assert_eq!(rep.oracle_risk, 3.0);
    }

    #[test]
    fn replication_floor() {
        let s = scenario(MeanSpec::Zero, FamilySpec::Custom { members: vec![vec![0.0; 3]] }, 1);
        assert!(run_scenario(&s).is_err());
        let few = Scenario { replications: 10, ..s };
        assert!(run_scenario(&few).unwrap().verdicts.is_empty());
    }

    #[test]
    fn thread_count_does_not_change_the_report() {
        let s = Scenario {
            n: 40,
            mean: MeanSpec::Sobolev { amplitude: 2.0, smoothness: 1.0 },
            family: FamilySpec::Tikhonov {
                spectrum: SpectrumSpec::polynomial(2.0),
                alpha: GridSpec { min: 1e-4, max: 0.5, count: 8, spacing: Spacing::Geometric },
            },
            ..scenario(MeanSpec::Zero, FamilySpec::Cutoff { cuts: None, step: Some(1) }, 250)
        };
        let one = run_scenario_with(&s, &RunOptions { threads: Some(1), ..RunOptions::default() }).unwrap();
        let four = run_scenario_with(&s, &RunOptions { threads: Some(4), ..RunOptions::default() }).unwrap();
        assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&four).unwrap());
    }

    #[test]
    fn h_eps_dominates_ure_minimizer_per_replication() {
        let s = Scenario {
            n: 30,
            sigma: 0.3,
            mean: MeanSpec::Sobolev { amplitude: 1.0, smoothness: 1.0 },
            family: FamilySpec::Cutoff { cuts: None, step: Some(2) },
            ..scenario(MeanSpec::Zero, FamilySpec::Cutoff { cuts: None, step: Some(1) }, 200)
        };
        let run = ScenarioRun::execute(&s, &RunOptions::default()).unwrap();
        assert!(run.records.iter().all(|r| r.h_eps_sq_norm >= r.ure_sq_norm));
    }

    #[test]
    fn singleton_h_eps_is_exact() {
        let s = scenario(MeanSpec::Constant { amplitude: 1.0 }, FamilySpec::Custom { members: vec![vec![0.5; 3]] }, 100);
        let d = ScenarioRun::execute(&s, &RunOptions::default()).unwrap().h_eps();
        assert_eq!(d.mean_sq_norm.mean, 0.75);
        assert_eq!(d.mean_sq_norm.se, 0.0);
    }

    #[test]
    fn check_names_round_trip() {
        for c in Check::ALL {
            assert_eq!(Check::parse(c.name()).unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.name()));
        }
        assert!(Check::parse("bogus").is_err());
    }
}
