use serde::{Deserialize, Serialize};

use super::psi::{log_remainder_bound, sqrt_remainder_shape, PsiFunction};
use super::runner::{Check, RunOptions, ScenarioRun, Verdict};
use super::scenario::Scenario;
use super::stats::spearman;
use crate::error::{Error, Result};
use crate::families::ConditionReport;

/// One signal scale of a remainder sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scale: f64,
    pub oracle_risk: f64,
    /// `r^H / sigma^2`
    pub oracle_over_sigma2: f64,
    pub remainder_ew: f64,
    pub remainder_ew_se: f64,
    pub remainder_ure: f64,
    pub remainder_ure_se: f64,
    pub bound_log: f64,
    pub bound_sqrt_shape: f64,
}

impl SweepRow {
    pub fn shape_ratio(&self) -> f64 {
        self.bound_log / self.bound_sqrt_shape
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderSweep {
    pub base: Scenario,
    pub psi: PsiFunction,
    pub condition: ConditionReport,
    pub rows: Vec<SweepRow>,
}

/// Runs `base` with its mean multiplied by each scale. Rows come out ordered
/// by `r^H / sigma^2`. Divergence is skipped; only losses are needed.
pub fn remainder_sweep(base: &Scenario, scales: &[f64], options: &RunOptions) -> Result<RemainderSweep> {
    if scales.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one scale".into()));
    }
    if let Some(bad) = scales.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
        return Err(Error::InvalidParameter(format!("signal scale {bad} must be finite and nonnegative")));
    }
    if let Some(k) = scales.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotoneGrid(k + 1));
    }
    let options = RunOptions { divergence: false, sampled_lambdas: 0, ..options.clone() };
    let psi = PsiFunction::new(options.psi_c, base.beta)?;
    let s2 = base.sigma * base.sigma;
    let mut condition = None;
    let mut rows = Vec::with_capacity(scales.len());
    for &c in scales {
        let run = ScenarioRun::execute(&base.with_scaled_mean(c), &options)?;
        let ew = run.stat(|r| r.loss_ew);
        let ure = run.stat(|r| r.loss_ure);
        rows.push(SweepRow {
            scale: c,
            oracle_risk: run.oracle_risk,
            oracle_over_sigma2: run.oracle_risk / s2,
            remainder_ew: ew.mean - run.oracle_risk,
            remainder_ew_se: ew.se,
            remainder_ure: ure.mean - run.oracle_risk,
            remainder_ure_se: ure.se,
            bound_log: log_remainder_bound(&psi, run.oracle_risk, base.sigma),
            bound_sqrt_shape: sqrt_remainder_shape(run.oracle_risk, base.sigma),
        });
        condition.get_or_insert(run.condition);
    }
    rows.sort_by(|a, b| a.oracle_over_sigma2.total_cmp(&b.oracle_over_sigma2).then(a.scale.total_cmp(&b.scale)));
    Ok(RemainderSweep { base: base.clone(), psi, condition: condition.expect("at least one row"), rows })
}

/// Scales `c` with `r^H(c mu) / sigma^2` equal to each target.
///
/// `r^H(c mu) = min_h [c^2 ||(1-h) mu||^2 + sigma^2 ||h||^2]` is nondecreasing
/// in `c`, so each target is found by bisection on `log c`.
pub fn scales_for_targets(base: &Scenario, targets: &[f64]) -> Result<Vec<f64>> {
    let ctx = base.context()?;
    let s2 = base.sigma * base.sigma;
    let mu = ctx.mu.values();
    let terms: Vec<(f64, f64)> = ctx
        .family
        .members()
        .iter()
        .map(|h| {
            let bias: f64 = h.values().iter().zip(mu).map(|(h, m)| ((1.0 - h) * m).powi(2)).sum();
            (bias, h.norm_sq())
        })
        .collect();
    let x_at = |c: f64| terms.iter().map(|(b, v)| c * c * b / s2 + v).fold(f64::INFINITY, f64::min);

    let (lo_c, hi_c) = (1e-12f64, 1e12f64);
    targets
        .iter()
        .map(|&t| {
            if !(x_at(lo_c) <= t && t <= x_at(hi_c)) {
                return Err(Error::InvalidParameter(format!(
                    "target r^H/sigma^2 = {t} is outside the reachable range [{}, {}]",
                    x_at(lo_c),
                    x_at(hi_c)
                )));
            }
            let (mut a, mut b) = (lo_c.ln(), hi_c.ln());
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if x_at(m.exp()) < t {
                    a = m;
                } else {
                    b = m;
                }
            }
            Ok((0.5 * (a + b)).exp())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepVerdict {
    /// `remainder_ew <= bound_log + 4 SE`, one per row.
    pub rows: Vec<Verdict>,
    /// Smallest `c` with `remainder_ew <= 2 beta sigma^2 log(x + c max(1, x / log(e + x)))` on every row.
    pub c_star: f64,
    /// `remainder_ew / (sigma^2 log(e + x))` per row.
    pub normalized: Vec<f64>,
    pub normalized_max: f64,
    pub growth_bounded: bool,
    pub spearman: f64,
    pub no_upward_trend: bool,
    /// `bound_log / bound_sqrt_shape` at the largest `x`.
    pub largest_shape_ratio: f64,
    pub shape_separated: bool,
    pub theory_applicable: bool,
}

impl SweepVerdict {
    pub fn bound_holds(&self) -> bool {
        self.rows.iter().all(|v| v.passed)
    }

    pub fn passed(&self) -> bool {
        self.bound_holds() && self.growth_bounded && self.no_upward_trend && self.shape_separated
    }
}

/// Checks a sweep against the log remainder bound and the growth of the
/// normalized remainder; also fits the empirical constant `c_star`.
pub fn verify_log_remainder_bound(sweep: &RemainderSweep) -> SweepVerdict {
    let base = &sweep.base;
    let s2 = base.sigma * base.sigma;
    let applicable = base.theory_applicable() && sweep.condition.satisfied();
    let rows: Vec<Verdict> = sweep
        .rows
        .iter()
        .map(|r| {
            let label = format!("scale {:e}, x = {:.6e}", r.scale, r.oracle_over_sigma2);
            Verdict::upper(Check::LogRemainder, label, r.remainder_ew, r.bound_log, r.remainder_ew_se, applicable)
        })
        .collect();

    let c_star = sweep
        .rows
        .iter()
        .map(|r| {
            let x = r.oracle_over_sigma2;
            let g = (x / (std::f64::consts::E + x).ln()).max(1.0);
            ((r.remainder_ew / (2.0 * base.beta * s2)).exp() - x) / g
        })
        .fold(0.0, f64::max);

    let xs: Vec<f64> = sweep.rows.iter().map(|r| r.oracle_over_sigma2).collect();
    let normalized: Vec<f64> = sweep
        .rows
        .iter()
        .map(|r| r.remainder_ew / (s2 * (std::f64::consts::E + r.oracle_over_sigma2).ln()))
        .collect();
    let normalized_max = normalized.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rho = spearman(&xs, &normalized);
    let largest_shape_ratio = sweep.rows.last().map_or(f64::NAN, SweepRow::shape_ratio);
    SweepVerdict {
        rows,
        c_star,
        growth_bounded: normalized_max <= 10.0 * base.beta,
        normalized,
        normalized_max,
        spearman: rho,
        // a constant sequence has no trend at all
        no_upward_trend: rho.is_nan() || rho <= 0.5,
        largest_shape_ratio,
        shape_separated: largest_shape_ratio < 1.0,
        theory_applicable: applicable,
    }
}
