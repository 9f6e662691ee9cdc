use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{MultiplierFamily, PriorWeights};
use crate::model::{argmin_smoothest, check_sigma, Observation};
use crate::summation::blocked_sum;

/// URE of every family member for the data `y`, in family order.
pub fn ure_values(y: &Observation, family: &MultiplierFamily) -> Result<Vec<f64>> {
    if y.len() != family.dim() {
        return Err(Error::Dimension { expected: family.dim(), found: y.len() });
    }
    let yv = y.values();
    let y2: Vec<f64> = yv.iter().map(|v| v * v).collect();
    Ok(ure_from_squares(&y2, y.sigma(), family))
}

pub(crate) fn ure_from_squares(y2: &[f64], sigma: f64, family: &MultiplierFamily) -> Vec<f64> {
    let s2 = sigma * sigma;
    let offset = s2 * y2.len() as f64;
    (0..family.len())
        .map(|j| {
            let oms = family.one_minus_sq(j);
            let residual = blocked_sum(y2.len(), |i| oms[i] * y2[i]);
            residual + 2.0 * s2 * family.l1_norms()[j] - offset
        })
        .collect()
}

/// The estimate `h_hat * Y` at the URE minimizer and the index of `h_hat`.
pub fn ure_minimizer(y: &Observation, family: &MultiplierFamily) -> Result<(Vec<f64>, usize)> {
    let ure = ure_values(y, family)?;
    let best = argmin_smoothest(&ure, family.l1_norms());
    let h = family.member(best).values();
    Ok((y.values().iter().zip(h).map(|(y, h)| h * y).collect(), best))
}

/// Exponential weights `w^h ∝ pi^h exp(-URE_h / (2 beta sigma^2))` for one data set.
#[derive(Debug, Clone, Serialize)]
pub struct WeightProfile {
    log_weights: Vec<f64>,
    weights: Vec<f64>,
    beta: f64,
    sigma: f64,
    ure_values: Vec<f64>,
    argmin_index: usize,
    log_normalizer: f64,
    #[serde(skip)]
    input_fingerprint: Option<u64>,
}

impl WeightProfile {
    /// Weights from precomputed URE values and prior weights.
    ///
    /// `l1_norms` only serves the tie rule of the URE argmin. Profiles built
    /// this way are not bound to an observation and skip the staleness check
    /// in [`aggregate`](super::aggregate).
    pub fn from_ure(ure_values: Vec<f64>, priors: &[f64], l1_norms: &[f64], beta: f64, sigma: f64) -> Result<Self> {
        if priors.len() != ure_values.len() || l1_norms.len() != ure_values.len() {
            return Err(Error::MismatchedPriors(format!(
                "{} URE values, {} priors, {} norms",
                ure_values.len(),
                priors.len(),
                l1_norms.len()
            )));
        }
        let log_priors: Vec<f64> = priors.iter().map(|p| p.ln()).collect();
        Self::build(ure_values, &log_priors, l1_norms, beta, sigma, None)
    }

    pub(crate) fn build(
        ure_values: Vec<f64>,
        log_priors: &[f64],
        l1_norms: &[f64],
        beta: f64,
        sigma: f64,
        input_fingerprint: Option<u64>,
    ) -> Result<Self> {
        check_sigma(sigma)?;
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!("temperature beta must be positive, got {beta}")));
        }
        if ure_values.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let argmin_index = argmin_smoothest(&ure_values, l1_norms);
        let r_min = ure_values[argmin_index];
        let scale = 2.0 * beta * sigma * sigma;
        let mut log_weights: Vec<f64> = ure_values
            .iter()
            .zip(log_priors)
            .map(|(r, lp)| lp - (r - r_min) / scale)
            .collect();
        let top = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(Error::InvalidParameter("every member has zero prior weight".into()));
        }
        let mut weights: Vec<f64> = log_weights.iter().map(|l| (l - top).exp()).collect();
        let total = crate::summation::sum(&weights);
        for w in &mut weights {
            *w /= total;
        }
        let log_total = total.ln();
        for l in &mut log_weights {
            *l -= top + log_total;
        }
        Ok(Self {
            log_weights,
            weights,
            beta,
            sigma,
            ure_values,
            argmin_index,
            log_normalizer: top + log_total,
            input_fingerprint,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Normalized log weights `log w^h`; `-inf` for zero-prior members.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn ure_values(&self) -> &[f64] {
        &self.ure_values
    }

    pub fn argmin_index(&self) -> usize {
        self.argmin_index
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `log sum_g pi^g exp(-(URE_g - URE_min) / (2 beta sigma^2))`.
    ///
    /// Nonnegative for priors built from an ordered family.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub(crate) fn check_inputs(&self, y: &Observation, family: &MultiplierFamily) -> Result<()> {
        if self.len() != family.len() || self.sigma != y.sigma() {
            return Err(Error::StaleProfile);
        }
        match self.input_fingerprint {
            Some(fp) if fp != input_fingerprint(y, family, self.beta) => Err(Error::StaleProfile),
            _ => Ok(()),
        }
    }
}

fn input_fingerprint(y: &Observation, family: &MultiplierFamily, beta: f64) -> u64 {
    let mut hasher = DefaultHasher::new();
    family.fingerprint().hash(&mut hasher);
    y.sigma().to_bits().hash(&mut hasher);
    beta.to_bits().hash(&mut hasher);
    for v in y.values() {
        v.to_bits().hash(&mut hasher);
    }
    hasher.finish()
}

/// Exponential weights for `y` over `family`.
///
/// `beta` must equal the temperature the priors were built with.
pub fn exp_weights(y: &Observation, family: &MultiplierFamily, priors: &PriorWeights, beta: f64) -> Result<WeightProfile> {
    priors.check_matches(family)?;
    if priors.beta() != beta {
        return Err(Error::MismatchedPriors(format!(
            "priors built with beta = {}, weights requested with beta = {beta}",
            priors.beta()
        )));
    }
    let ure = ure_values(y, family)?;
    profile_from_ure(ure, y, family, priors)
}

pub(crate) fn profile_from_ure(
    ure: Vec<f64>,
    y: &Observation,
    family: &MultiplierFamily,
    priors: &PriorWeights,
) -> Result<WeightProfile> {
    let fp = input_fingerprint(y, family, priors.beta());
    WeightProfile::build(ure, priors.log_weights(), family.l1_norms(), priors.beta(), y.sigma(), Some(fp))
}
