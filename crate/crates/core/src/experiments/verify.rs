use rand::Rng;
use rand_distr::Exp1;

use super::psi::log_remainder_bound;
use super::runner::{Check, HEpsDiagnostic, RunOptions, ScenarioRun, Verdict};
use super::scenario::Scenario;
use crate::error::Result;
use crate::estimators::kl_divergence;
use crate::noise::auxiliary_rng;
use crate::summation::Neumaier;

/// `E ||mu_bar - mu||^2 <= E sum_h w^h URE_h`, checked on the paired difference.
pub fn verify_weighted_ure_bound(run: &ScenarioRun) -> Verdict {
    let diff = run.stat(|r| r.loss_ew - r.weighted_ure);
    let wure = run.stat(|r| r.weighted_ure);
    let risk = wure.mean + diff.mean;
    Verdict::upper(Check::WeightedUre, "risk <= E weighted URE", risk, wure.mean, diff.se, run.scenario.theory_applicable())
}

/// Uniform random point on the probability simplex of dimension `len`.
fn dirichlet_point<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / total).collect()
}

/// `min_h [R_h + 2 sigma^2 beta log(1/pi^h)]` over the family.
///
/// With `normalized` the priors are divided by their sum first, which is the
/// form the bound holds in; the raw priors sum to more than one and give a
/// smaller value that the aggregate's risk can exceed.
pub fn member_kl_bound(run: &ScenarioRun, normalized: bool) -> f64 {
    let s = &run.scenario;
    let scale = 2.0 * s.sigma * s.sigma * s.beta;
    let priors = &run.context.priors;
    let log_mass = if normalized { priors.total().ln() } else { 0.0 };
    run.member_risks
        .iter()
        .zip(priors.log_weights())
        .map(|(r, lp)| r + scale * (log_mass - lp))
        .fold(f64::INFINITY, f64::min)
}

/// KL oracle bound on the aggregate's risk, with normalized priors.
///
/// The first verdict is [`member_kl_bound`]; each of the `sampled` further
/// verdicts uses `sum_h lambda_h R_h + 2 sigma^2 beta KL(lambda, pi)` for a
/// uniform simplex point `lambda` drawn from the auxiliary stream.
pub fn verify_kl_oracle_bound(run: &ScenarioRun, sampled: usize) -> Result<Vec<Verdict>> {
    let s = &run.scenario;
    let applicable = s.theory_applicable();
    let scale = 2.0 * s.sigma * s.sigma * s.beta;
    let risk = run.stat(|r| r.loss_ew);
    let priors = &run.context.priors;

    let best = member_kl_bound(run, true);
    let mut out = vec![Verdict::upper(Check::KlOracle, "min over members", risk.mean, best, risk.se, applicable)];

    let mut rng = auxiliary_rng(s.seed);
    for k in 0..sampled {
        let lambda = dirichlet_point(run.member_risks.len(), &mut rng);
        let mixed: f64 = lambda.iter().zip(&run.member_risks).map(|(l, r)| l * r).collect::<Neumaier>().total();
        let rhs = mixed + scale * kl_divergence(&lambda, priors)?;
        out.push(Verdict::upper(Check::KlOracle, format!("sampled simplex point {k}"), risk.mean, rhs, risk.se, applicable));
    }
    Ok(out)
}

/// `remainder_ew <= 2 beta sigma^2 log(x + Psi(x))` for this scenario alone.
pub fn verify_log_remainder(run: &ScenarioRun) -> Result<Verdict> {
    let s = &run.scenario;
    let risk = run.stat(|r| r.loss_ew);
    let bound = log_remainder_bound(&run.psi()?, run.oracle_risk, s.sigma);
    let applicable = s.theory_applicable() && run.condition.satisfied();
    Ok(Verdict::upper(Check::LogRemainder, "remainder <= log bound", risk.mean - run.oracle_risk, bound, risk.se, applicable))
}

/// Stein's estimate of the aggregate's risk is unbiased. Needs divergence.
pub fn verify_stein_identity(run: &ScenarioRun) -> Verdict {
    let diff = run.stat(|r| r.stein_ew - r.loss_ew);
    let loss = run.stat(|r| r.loss_ew);
    Verdict::two_sided(Check::Stein, "stein estimate = risk", loss.mean + diff.mean, loss.mean, diff.se)
}

/// For a single-member family: Monte Carlo URE and loss both match the exact risk.
pub fn verify_calibration(run: &ScenarioRun) -> Vec<Verdict> {
    let ure = run.stat(|r| r.weighted_ure);
    let loss = run.stat(|r| r.loss_ure);
    vec![
        Verdict::two_sided(Check::Calibration, "mean URE = exact risk", ure.mean, run.oracle_risk, ure.se),
        Verdict::two_sided(Check::Calibration, "mean loss = exact risk", loss.mean, run.oracle_risk, loss.se),
    ]
}

/// Monte Carlo `sigma^2 E ||h_eps||^2` against the constant-free part of its bound.
pub fn diagnose_h_eps(scenario: &Scenario, eps: f64) -> Result<HEpsDiagnostic> {
    let options = RunOptions { eps: Some(eps), divergence: false, sampled_lambdas: 0, ..RunOptions::default() };
    Ok(ScenarioRun::execute(scenario, &options)?.h_eps())
}
