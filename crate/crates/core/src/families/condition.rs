use serde::{Deserialize, Serialize};

use super::{MultiplierFamily, PriorWeights};
use crate::error::Result;
use crate::summation::{blocked_sum, Neumaier};

/// Empirical regularity constants of a family.
///
/// `k_lower` is the smallest ratio `sum(h_i^2 - g_i^2) / (||h||_1 - ||g||_1)`
/// over ordered pairs `g < h`; `k_upper` is the largest successor ratio
/// `||h+||^2 / ||h||^2`. Members with `||h|| = 0` have no defined ratio and
/// are listed in `excluded_from_upper` instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub k_lower: Option<f64>,
    pub k_lower_pair: Option<(usize, usize)>,
    pub k_upper: Option<f64>,
    pub k_upper_member: Option<usize>,
    pub excluded_from_upper: Vec<usize>,
    pub lower_satisfied: bool,
    pub upper_satisfied: bool,
}

impl ConditionReport {
    pub fn satisfied(&self) -> bool {
        self.lower_satisfied && self.upper_satisfied
    }
}

fn pair_ratio(g: &[f64], h: &[f64]) -> f64 {
    let num = blocked_sum(g.len(), |i| (h[i] - g[i]) * (h[i] + g[i]));
    let den = blocked_sum(g.len(), |i| h[i] - g[i]);
    num / den
}

fn improves(candidate: f64, best: Option<f64>) -> bool {
    match best {
        None => true,
        Some(b) => candidate < b - 1e-12 * b.abs(),
    }
}

/// Scans consecutive pairs only. Any other pair's ratio is a weighted
/// average of the consecutive ratios between its ends, so the minimum is the same.
pub fn check_condition(family: &MultiplierFamily) -> ConditionReport {
    let members = family.members();
    let mut k_lower = None;
    let mut k_lower_pair = None;
    for j in 0..members.len().saturating_sub(1) {
        let r = pair_ratio(members[j].values(), members[j + 1].values());
        if improves(r, k_lower) {
            k_lower = Some(r);
            k_lower_pair = Some((j, j + 1));
        }
    }

    let sq = family.sq_norms();
    let mut k_upper: Option<f64> = None;
    let mut k_upper_member = None;
    let mut excluded = Vec::new();
    for j in 0..members.len().saturating_sub(1) {
        if sq[j] == 0.0 {
            excluded.push(j);
            continue;
        }
        let r = sq[j + 1] / sq[j];
        if k_upper.is_none_or(|b| r > b) {
            k_upper = Some(r);
            k_upper_member = Some(j);
        }
    }

    ConditionReport {
        lower_satisfied: k_lower.is_none_or(|k| k > 0.0),
        upper_satisfied: k_upper.is_none_or(f64::is_finite),
        k_lower,
        k_lower_pair,
        k_upper,
        k_upper_member,
        excluded_from_upper: excluded,
    }
}

/// Brute-force minimum of the lower ratio over all ordered pairs, in
/// lexicographic pair order with the same tie rule as [`check_condition`].
pub fn condition_lower_all_pairs(family: &MultiplierFamily) -> Option<(f64, (usize, usize))> {
    let members = family.members();
    let mut best: Option<(f64, (usize, usize))> = None;
    for j in 0..members.len() {
        for k in j + 1..members.len() {
            let r = pair_ratio(members[j].values(), members[k].values());
            if improves(r, best.map(|b| b.0)) {
                best = Some((r, (j, k)));
            }
        }
    }
    best
}

/// Empirical prior-mass diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriorBounds {
    /// Whether `sum_{g <= h} pi^g <= (K^o ||h||^2 - ||h_min||^2) / (K_o beta)`
    /// holds for every member below `h_max` with nonzero norm.
    pub mass_bound_holds: bool,
    /// Smallest `rhs - lhs` of that bound.
    pub mass_bound_margin: f64,
    /// Smallest `C` with `sum_{g <= h} pi^g <= C (||h||^2 + 1)` for all members.
    pub mass_constant: f64,
    /// Smallest and largest prior mass on a band `||h||^2 <= ||g||^2 <= ||h||^2 + 1`.
    pub band_min: f64,
    pub band_max: f64,
}

pub fn prior_bounds(family: &MultiplierFamily, priors: &PriorWeights, report: &ConditionReport) -> Result<PriorBounds> {
    priors.check_matches(family)?;
    let pi = priors.weights();
    let sq = family.sq_norms();
    let beta = priors.beta();
    let last = pi.len() - 1;

    let mut below = Neumaier::new();
    let mut margin = f64::INFINITY;
    let mut holds = true;
    let mut mass_constant: f64 = 0.0;
    for j in 0..pi.len() {
        below.add(pi[j]);
        let lhs = below.total();
        mass_constant = mass_constant.max(lhs / (sq[j] + 1.0));
        if j == last || sq[j] == 0.0 {
            continue;
        }
        if let (Some(kl), Some(ku)) = (report.k_lower, report.k_upper) {
            let rhs = (ku * sq[j] - sq[0]) / (kl * beta);
            margin = margin.min(rhs - lhs);
            if lhs > rhs * (1.0 + 1e-12) {
                holds = false;
            }
        }
    }

    let mut band_min = f64::INFINITY;
    let mut band_max: f64 = 0.0;
    for j in 0..pi.len() {
        let mass: Neumaier = (0..pi.len())
            .filter(|&k| sq[k] >= sq[j] && sq[k] <= sq[j] + 1.0)
            .map(|k| pi[k])
            .collect();
        band_min = band_min.min(mass.total());
        band_max = band_max.max(mass.total());
    }

    Ok(PriorBounds { mass_bound_holds: holds, mass_bound_margin: margin, mass_constant, band_min, band_max })
}
