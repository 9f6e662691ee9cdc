use serde::Serialize;

use super::MultiplierFamily;
use crate::error::{Error, Result};
use crate::summation::Neumaier;

/// Prior weights `pi^h = 1 - exp(-(||h+||_1 - ||h||_1) / beta)`, with
/// `pi = 1` for the largest member.
#[derive(Debug, Clone, Serialize)]
pub struct PriorWeights {
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    /// l1 gaps to the successor; one shorter than `weights`.
    gaps: Vec<f64>,
    beta: f64,
    /// Members whose prior vanished (zero l1 gap to the successor).
    degenerate: Vec<usize>,
    #[serde(skip)]
    family_fingerprint: Option<u64>,
}

impl PriorWeights {
    /// Priors from successive l1 gaps `gaps[j] = ||h_{j+1}||_1 - ||h_j||_1`.
    pub fn from_gaps(gaps: Vec<f64>, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        if let Some(g) = gaps.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::InvalidParameter(format!("l1 gaps must be nonnegative, got {g}")));
        }
        let mut weights = Vec::with_capacity(gaps.len() + 1);
        let mut log_weights = Vec::with_capacity(gaps.len() + 1);
        let mut degenerate = Vec::new();
        for (j, &g) in gaps.iter().enumerate() {
            let pi = -(-g / beta).exp_m1();
            if pi == 0.0 {
                degenerate.push(j);
            }
            weights.push(pi);
            log_weights.push(pi.ln());
        }
        weights.push(1.0);
        log_weights.push(0.0);
        Ok(Self { weights, log_weights, gaps, beta, degenerate, family_fingerprint: None })
    }

    /// Priors from l1 norms listed in ascending family order.
    pub fn from_l1_norms(l1_norms: &[f64], beta: f64) -> Result<Self> {
        if l1_norms.is_empty() {
            return Err(Error::EmptyFamily);
        }
        Self::from_gaps(l1_norms.windows(2).map(|w| w[1] - w[0]).collect(), beta)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn degenerate(&self) -> &[usize] {
        &self.degenerate
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().copied().collect::<Neumaier>().total()
    }

    /// Errors unless these priors were built from `family`.
    pub fn check_matches(&self, family: &MultiplierFamily) -> Result<()> {
        if self.len() != family.len() {
            return Err(Error::MismatchedPriors(format!(
                "{} prior weights for {} members",
                self.len(),
                family.len()
            )));
        }
        match self.family_fingerprint {
            Some(fp) if fp != family.fingerprint() => {
                Err(Error::MismatchedPriors("priors were built from a different family".into()))
            }
            _ => Ok(()),
        }
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && !beta.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("temperature beta must be positive, got {beta}")))
    }
}

/// Prior weights for `family` at temperature `beta`.
pub fn prior_weights(family: &MultiplierFamily, beta: f64) -> Result<PriorWeights> {
    let gaps = (0..family.len() - 1).map(|j| family.l1_gap(j).unwrap_or(0.0)).collect();
    let mut priors = PriorWeights::from_gaps(gaps, beta)?;
    priors.family_fingerprint = Some(family.fingerprint());
    Ok(priors)
}

/// Largest relative residual of the telescoping identity
/// `sum_{g >= h} pi^g exp(-||g||_1 / beta) = exp(-||h||_1 / beta)` over members.
///
/// Both sides are divided by `exp(-||h||_1 / beta)`, so each term is
/// `pi^g exp(-(||g||_1 - ||h||_1) / beta)` with the exponent built from gaps.
pub fn check_prior_identity(priors: &PriorWeights, family: &MultiplierFamily) -> Result<f64> {
    priors.check_matches(family)?;
    let pi = priors.weights();
    let gaps = priors.gaps();
    let beta = priors.beta();
    let mut worst: f64 = 0.0;
    for j in 0..pi.len() {
        let mut lhs = Neumaier::new();
        let mut offset = Neumaier::new();
        for k in j..pi.len() {
            lhs.add(pi[k] * (-offset.total() / beta).exp());
            if k < gaps.len() {
                offset.add(gaps[k]);
            }
        }
        worst = worst.max((lhs.total() - 1.0).abs());
    }
    Ok(worst)
}
