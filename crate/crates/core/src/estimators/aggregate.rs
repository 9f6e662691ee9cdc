use serde::Serialize;

use super::WeightProfile;
use crate::error::Result;
use crate::families::MultiplierFamily;
use crate::model::Observation;
use crate::summation::{blocked_sum, Neumaier};

/// The aggregate `mu_bar = sum_h w^h h Y` with its Stein divergence and the
/// weighted URE `sum_h w^h URE_h`.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateResult {
    pub estimate: Vec<f64>,
    pub profile: WeightProfile,
    pub divergence: f64,
    pub weighted_ure: f64,
}

impl AggregateResult {
    /// Stein's unbiased estimate of the aggregate's own risk,
    /// `||mu_bar - Y||^2 + 2 sigma^2 div - sigma^2 n`.
    pub fn stein_risk_estimate(&self, y: &Observation) -> f64 {
        let yv = y.values();
        let s2 = y.sigma() * y.sigma();
        let resid = blocked_sum(yv.len(), |i| (self.estimate[i] - yv[i]).powi(2));
        resid + 2.0 * s2 * self.divergence - s2 * yv.len() as f64
    }
}

/// `h_bar_i = sum_h w^h h_i`, skipping members whose weight underflowed.
pub(crate) fn mean_multiplier(family: &MultiplierFamily, weights: &[f64]) -> Vec<f64> {
    let mut h_bar = vec![0.0; family.dim()];
    for (h, &w) in family.members().iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (acc, v) in h_bar.iter_mut().zip(h.values()) {
            *acc += w * v;
        }
    }
    h_bar
}

pub(crate) fn weighted_ure(profile: &WeightProfile) -> f64 {
    profile
        .weights()
        .iter()
        .zip(profile.ure_values())
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, r)| w * r)
        .collect::<Neumaier>()
        .total()
}

/// Divergence `sum_i d mu_bar_i / d Y_i` given the mean multiplier.
///
/// With `m_i = sum_h w^h (1 - h_i)^2`, differentiating the weights gives
/// `d mu_bar_i / d Y_i = h_bar_i - Y_i^2 / (beta sigma^2) * sum_h w^h ((1 - h_i)^2 - m_i)(h_i - h_bar_i)`.
pub(crate) fn divergence_with(family: &MultiplierFamily, profile: &WeightProfile, y: &[f64], h_bar: &[f64]) -> f64 {
    let n = family.dim();
    let weights = profile.weights();
    let mut m = vec![0.0; n];
    for (j, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (acc, v) in m.iter_mut().zip(family.one_minus_sq(j)) {
            *acc += w * v;
        }
    }
    let mut cov = vec![0.0; n];
    for (j, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let h = family.member(j).values();
        let oms = family.one_minus_sq(j);
        for i in 0..n {
            cov[i] += w * (oms[i] - m[i]) * (h[i] - h_bar[i]);
        }
    }
    let scale = profile.beta() * profile.sigma() * profile.sigma();
    blocked_sum(n, |i| h_bar[i] - y[i] * y[i] / scale * cov[i])
}

/// Combines the member estimates with the profile's weights.
pub fn aggregate(y: &Observation, family: &MultiplierFamily, profile: &WeightProfile) -> Result<AggregateResult> {
    profile.check_inputs(y, family)?;
    let h_bar = mean_multiplier(family, profile.weights());
    let estimate = y.values().iter().zip(&h_bar).map(|(y, h)| h * y).collect();
    let divergence = divergence_with(family, profile, y.values(), &h_bar);
    Ok(AggregateResult { estimate, profile: profile.clone(), divergence, weighted_ure: weighted_ure(profile) })
}

/// Analytic Stein divergence of the aggregate at `y`.
pub fn aggregate_divergence(y: &Observation, family: &MultiplierFamily, profile: &WeightProfile) -> Result<f64> {
    profile.check_inputs(y, family)?;
    let h_bar = mean_multiplier(family, profile.weights());
    Ok(divergence_with(family, profile, y.values(), &h_bar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::estimators::{exp_weights, ure_values};
    use crate::families::{build_tikhonov, grid, prior_weights, MultiplierFamily, PriorWeights, Spectrum};
    use crate::model::{generate_observation, MeanVector};
    use crate::noise::replication_rng;
    use approx::assert_relative_eq;

    fn estimate_at(y: &Observation, fam: &MultiplierFamily, priors: &PriorWeights) -> Vec<f64> {
        let p = exp_weights(y, fam, priors, priors.beta()).unwrap();
        aggregate(y, fam, &p).unwrap().estimate
    }

    /// Central differences of `mu_bar_i` in `Y_i`, recomputing the weights.
    fn fd_divergence(y: &Observation, fam: &MultiplierFamily, priors: &PriorWeights) -> f64 {
        (0..y.len())
            .map(|i| {
                let yi = y.values()[i];
                let step = 1e-5 * (1.0 + yi.abs());
                let up = estimate_at(&y.with_coordinate(i, yi + step), fam, priors)[i];
                let down = estimate_at(&y.with_coordinate(i, yi - step), fam, priors)[i];
                (up - down) / (2.0 * step)
            })
            .sum()
    }

    fn instance(n: usize, count: usize, beta: f64, seed: u64) -> (Observation, MultiplierFamily, PriorWeights) {
        let s = Spectrum::polynomial(n, 2.0, 1.0).unwrap();
        let fam = build_tikhonov(&s, &grid(1e-4, 10.0, count, true).unwrap()).unwrap();
        let priors = prior_weights(&fam, beta).unwrap();
        let mu = MeanVector::new((1..=n).map(|k| 3.0 / k as f64).collect()).unwrap();
        let y = generate_observation(&mu, 1.0, &mut replication_rng(seed, 0)).unwrap();
        (y, fam, priors)
    }

    #[test]
    fn divergence_matches_finite_differences() {
        for (seed, beta) in [(1, 1.0), (2, 4.0), (3, 1.0)] {
            let (y, fam, priors) = instance(20, 10, beta, seed);
            let p = exp_weights(&y, &fam, &priors, beta).unwrap();
            let analytic = aggregate_divergence(&y, &fam, &p).unwrap();
            let fd = fd_divergence(&y, &fam, &priors);
            assert_relative_eq!(analytic, fd, max_relative = 1e-5);
        }
    }

    #[test]
    fn single_member_divergence_is_trace() {
        let fam = MultiplierFamily::custom(vec![vec![0.9, 0.5, 0.1]]).unwrap();
        let priors = prior_weights(&fam, 4.0).unwrap();
        let y = Observation::new(vec![1.0, -2.0, 3.0], 1.0).unwrap();
        let p = exp_weights(&y, &fam, &priors, 4.0).unwrap();
        assert_relative_eq!(aggregate_divergence(&y, &fam, &p).unwrap(), 1.5, max_relative = 1e-15);
    }

    #[test]
    fn frozen_weights_divergence() {
        let (y, fam, _) = instance(20, 10, 1e12, 5);
        let priors = prior_weights(&fam, 1e12).unwrap();
        let p = exp_weights(&y, &fam, &priors, 1e12).unwrap();
        let h_bar = mean_multiplier(&fam, p.weights());
        let trace: f64 = h_bar.iter().sum();
        assert!((aggregate_divergence(&y, &fam, &p).unwrap() - trace).abs() <= 1e-6);
    }

    #[test]
    fn degenerate_and_half_weights() {
        let fam = MultiplierFamily::custom(vec![vec![0.0; 3], vec![1.0; 3]]).unwrap();
        let y = Observation::new(vec![2.0, -4.0, 6.0], 1.0).unwrap();
        let ure = ure_values(&y, &fam).unwrap();
        let half = WeightProfile::from_ure(vec![0.0, 0.0], &[1.0, 1.0], fam.l1_norms(), 4.0, 1.0).unwrap();
        assert_eq!(aggregate(&y, &fam, &half).unwrap().estimate, vec![1.0, -2.0, 3.0]);
        let point = WeightProfile::from_ure(ure, &[0.0, 1.0], fam.l1_norms(), 4.0, 1.0).unwrap();
        assert_eq!(aggregate(&y, &fam, &point).unwrap().estimate, y.values());
    }

    #[test]
    fn estimate_lies_between_member_estimates() {
        let (y, fam, priors) = instance(50, 15, 4.0, 9);
        let p = exp_weights(&y, &fam, &priors, 4.0).unwrap();
        let est = aggregate(&y, &fam, &p).unwrap().estimate;
        for i in 0..y.len() {
            let yi = y.values()[i];
            if yi == 0.0 {
                continue;
            }
            let ratio = est[i] / yi;
            let lo = fam.members().iter().map(|h| h.values()[i]).fold(f64::INFINITY, f64::min);
            let hi = fam.members().iter().map(|h| h.values()[i]).fold(f64::NEG_INFINITY, f64::max);
            assert!(ratio >= lo - 1e-12 && ratio <= hi + 1e-12);
        }
    }

    #[test]
    fn stale_profile_is_rejected() {
        let (y, fam, priors) = instance(20, 10, 4.0, 1);
        let p = exp_weights(&y, &fam, &priors, 4.0).unwrap();
        let moved = y.with_coordinate(0, y.values()[0] + 1.0);
        assert!(matches!(aggregate(&moved, &fam, &p), Err(Error::StaleProfile)));
    }
}
