use super::{ure_values, WeightProfile};
use crate::error::{Error, Result};
use crate::families::{MultiplierFamily, PriorWeights};
use crate::model::{argmin_smoothest, Observation};
use crate::summation::Neumaier;

/// Largest member `h` (in family order) with
/// `URE_h - URE_min <= 2 beta eps sigma^2 (||h||^2 - ||h_hat||^2) + 2 beta sigma^2`,
/// where `h_hat` is the URE argmin. Requires `0 < eps < 1 / (5 beta)`.
///
/// `h_hat` itself always qualifies, so the result is at least `argmin`.
pub fn h_eps_index(ure: &[f64], sq_norms: &[f64], argmin: usize, beta: f64, sigma: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0 / (5.0 * beta)) {
        return Err(Error::InvalidParameter(format!("eps = {eps} is outside (0, 1/(5 beta)) for beta = {beta}")));
    }
    let s2 = sigma * sigma;
    let r_min = ure[argmin];
    let base = sq_norms[argmin];
    let index = (argmin..ure.len())
        .rev()
        .find(|&j| ure[j] - r_min <= 2.0 * beta * eps * s2 * (sq_norms[j] - base) + 2.0 * beta * s2)
        .unwrap_or(argmin);
    Ok(index)
}

/// [`h_eps_index`] for an observation.
pub fn h_eps_hat(y: &Observation, family: &MultiplierFamily, beta: f64, eps: f64) -> Result<usize> {
    let ure = ure_values(y, family)?;
    let argmin = argmin_smoothest(&ure, family.l1_norms());
    h_eps_index(&ure, family.sq_norms(), argmin, beta, y.sigma(), eps)
}

/// `sum_h w^h log(pi^h / w^h)`, with zero weights contributing nothing.
pub fn entropy_term(profile: &WeightProfile, priors: &PriorWeights) -> f64 {
    profile
        .weights()
        .iter()
        .zip(profile.log_weights())
        .zip(priors.log_weights())
        .filter(|((w, _), _)| **w > 0.0)
        .map(|((w, lw), lp)| w * (lp - lw))
        .collect::<Neumaier>()
        .total()
}

/// Kullback-Leibler divergence of `lambda` from the normalized priors
/// `pi^h / sum_g pi^g`.
///
/// The priors of an ordered family sum to more than one, and the exponential
/// weights only see them up to that normalization. Returns `+inf` when
/// `lambda` charges a member with zero prior.
pub fn kl_divergence(lambda: &[f64], priors: &PriorWeights) -> Result<f64> {
    if lambda.len() != priors.len() {
        return Err(Error::Dimension { expected: priors.len(), found: lambda.len() });
    }
    if let Some(l) = lambda.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::NotOnSimplex(format!("negative or non-finite entry {l}")));
    }
    let total = crate::summation::sum(lambda);
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotOnSimplex(format!("entries sum to {total}")));
    }
    let mass = priors.total();
    let mut acc = Neumaier::new();
    for (&l, &pi) in lambda.iter().zip(priors.weights()) {
        if l == 0.0 {
            continue;
        }
        if pi == 0.0 {
            return Ok(f64::INFINITY);
        }
        acc.add(l * (l * mass / pi).ln());
    }
    Ok(acc.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::exp_weights;
    use crate::families::{build_tikhonov, grid, prior_weights, Spectrum};
    use crate::model::{generate_observation, MeanVector};
    use crate::noise::replication_rng;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn h_eps_hand_built_family() {
        let (beta, sigma, eps) = (4.0, 1.0, 0.01);
        let s = beta * sigma * sigma;
        let idx = h_eps_index(&[0.0, s, 10.0 * s], &[0.0, 1.0, 2.0], 0, beta, sigma, eps).unwrap();
        assert_eq!(idx, 1);
    }

    #[test]
    fn h_eps_top_member_stays_on_top() {
        assert_eq!(h_eps_index(&[5.0, 3.0, 1.0], &[0.0, 1.0, 2.0], 2, 4.0, 1.0, 0.01).unwrap(), 2);
    }

    #[test]
    fn h_eps_range_is_enforced() {
        for eps in [0.0, 0.05, 0.1, -0.01] {
            assert!(h_eps_index(&[0.0], &[0.0], 0, 4.0, 1.0, eps).is_err());
        }
    }

    #[test]
    fn h_eps_never_below_argmin() {
        let s = Spectrum::polynomial(100, 2.0, 1.0).unwrap();
        let fam = build_tikhonov(&s, &grid(1e-6, 1e2, 30, true).unwrap()).unwrap();
        let mu = MeanVector::new((1..=100).map(|k| 1.0 / k as f64).collect()).unwrap();
        for seed in 0..30 {
            let y = generate_observation(&mu, 0.1, &mut replication_rng(seed, 0)).unwrap();
            let ure = ure_values(&y, &fam).unwrap();
            let argmin = argmin_smoothest(&ure, fam.l1_norms());
            assert!(h_eps_hat(&y, &fam, 4.0, 0.025).unwrap() >= argmin);
        }
    }

    #[test]
    fn entropy_cases() {
        let pri = PriorWeights::from_l1_norms(&[0.0, 4.0, 8.0], 4.0).unwrap();
        let point = WeightProfile::from_ure(vec![1e9, 1e9, 0.0], pri.weights(), &[0.0, 4.0, 8.0], 4.0, 1.0).unwrap();
        assert_eq!(entropy_term(&point, &pri), 0.0);

        let flat = WeightProfile::from_ure(vec![2.0; 3], pri.weights(), &[0.0, 4.0, 8.0], 4.0, 1.0).unwrap();
        assert_relative_eq!(entropy_term(&flat, &pri), pri.total().ln(), max_relative = 1e-14);
    }

    #[test]
    fn entropy_is_bounded_by_log_prior_mass() {
        let pri = PriorWeights::from_l1_norms(&[0.0, 1.0, 3.0, 3.5, 7.0], 2.0).unwrap();
        let l1 = [0.0, 1.0, 3.0, 3.5, 7.0];
        let mut rng = replication_rng(11, 0);
        let bound = pri.total().ln();
        for _ in 0..500 {
            let ure: Vec<f64> = (0..5).map(|_| rng.random_range(-20.0..20.0)).collect();
            let p = WeightProfile::from_ure(ure, pri.weights(), &l1, 2.0, 1.0).unwrap();
            assert!(entropy_term(&p, &pri) <= bound + 1e-12);
        }
    }

    #[test]
    fn kl_cases() {
        let e1 = 1.0 - (-1.0f64).exp();
        let pri = PriorWeights::from_l1_norms(&[0.0, 4.0, 8.0], 4.0).unwrap();
        assert_relative_eq!(pri.weights()[0], e1, max_relative = 1e-15);
        let mass = 2.0 * e1 + 1.0;
        assert_relative_eq!(pri.total(), mass, max_relative = 1e-15);
        assert_relative_eq!(kl_divergence(&[0.0, 1.0, 0.0], &pri).unwrap(), (mass / e1).ln(), max_relative = 1e-14);
        let third = 1.0 / 3.0;
        let expected = third * ((third * mass / e1).ln() * 2.0 + (third * mass).ln());
        assert_relative_eq!(kl_divergence(&[third; 3], &pri).unwrap(), expected, max_relative = 1e-14);

        let degenerate = PriorWeights::from_l1_norms(&[1.0, 1.0], 4.0).unwrap();
        assert_eq!(kl_divergence(&[0.5, 0.5], &degenerate).unwrap(), f64::INFINITY);
        assert!(matches!(kl_divergence(&[0.5, 0.6, 0.0], &pri), Err(Error::NotOnSimplex(_))));
    }

    #[test]
    fn kl_is_nonnegative_and_zero_at_the_normalized_prior() {
        let pri = PriorWeights::from_l1_norms(&[0.0, 1.0, 3.0, 3.5, 7.0], 2.0).unwrap();
        let normalized: Vec<f64> = pri.weights().iter().map(|p| p / pri.total()).collect();
        assert!(kl_divergence(&normalized, &pri).unwrap().abs() < 1e-14);
        let mut rng = replication_rng(4, 0);
        for _ in 0..200 {
            let raw: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let lambda: Vec<f64> = raw.iter().map(|v| v / total).collect();
            assert!(kl_divergence(&lambda, &pri).unwrap() >= -1e-14);
        }
    }

    #[test]
    fn weighted_ure_decomposes_into_min_entropy_and_normalizer() {
        let s = Spectrum::polynomial(80, 2.0, 1.0).unwrap();
        let fam = build_tikhonov(&s, &grid(1e-5, 10.0, 25, true).unwrap()).unwrap();
        let beta = 4.0;
        let priors = prior_weights(&fam, beta).unwrap();
        let mu = MeanVector::new((1..=80).map(|k| 2.0 / k as f64).collect()).unwrap();
        for seed in 0..10 {
            let y = generate_observation(&mu, 0.5, &mut replication_rng(seed, 0)).unwrap();
            let p = exp_weights(&y, &fam, &priors, beta).unwrap();
            let lhs: f64 = p.weights().iter().zip(p.ure_values()).map(|(w, r)| w * r).sum();
            let scale = 2.0 * beta * 0.25;
            let rhs = p.ure_values()[p.argmin_index()] + scale * entropy_term(&p, &priors) - scale * p.log_normalizer();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-10, epsilon = 1e-10);
        }
    }
}
