//! The Gaussian sequence model `Y_i = mu_i + sigma * xi_i` and linear
//! shrinkage estimates `h_i * Y_i`.
//!
//! The noise level is always supplied by the caller; nothing here estimates it.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::MultiplierFamily;
use crate::summation::blocked_sum;

/// Unknown mean vector `mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanVector(Vec<f64>);

impl MeanVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("mean vector is empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("mean entry {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| c * v).collect())
    }

    pub fn norm_sq(&self) -> f64 {
        blocked_sum(self.0.len(), |i| self.0[i] * self.0[i])
    }
}

/// Observed data `Y` together with the known noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    values: Vec<f64>,
    sigma: f64,
}

impl Observation {
    pub fn new(values: Vec<f64>, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if values.is_empty() {
            return Err(Error::InvalidParameter("observation is empty".into()));
        }
        Ok(Self { values, sigma })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// A copy with coordinate `i` replaced; used by finite-difference checks.
    pub fn with_coordinate(&self, i: usize, value: f64) -> Self {
        let mut values = self.values.clone();
        values[i] = value;
        Self { values, sigma: self.sigma }
    }
}

/// A multiplier vector `h` with `1 >= h_1 >= h_2 >= ... >= h_n >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Multiplier(Vec<f64>);

impl Multiplier {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("multiplier is empty".into()));
        }
        for (i, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "multiplier entry {i} = {v} is outside [0, 1]"
                )));
            }
        }
        if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter(format!(
                "multiplier increases between entries {i} and {}",
                i + 1
            )));
        }
        Ok(Self(values))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1_norm(&self) -> f64 {
        blocked_sum(self.0.len(), |i| self.0[i])
    }

    pub fn norm_sq(&self) -> f64 {
        blocked_sum(self.0.len(), |i| self.0[i] * self.0[i])
    }
}

impl TryFrom<Vec<f64>> for Multiplier {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Multiplier::new(values)
    }
}

impl From<Multiplier> for Vec<f64> {
    fn from(h: Multiplier) -> Self {
        h.0
    }
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("noise level must be positive and finite, got {sigma}")))
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

/// Draws `Y = mu + sigma * xi` with i.i.d. standard normal `xi` from `rng`.
pub fn generate_observation<R: Rng + ?Sized>(
    mu: &MeanVector,
    sigma: f64,
    rng: &mut R,
) -> Result<Observation> {
    check_sigma(sigma)?;
    let values = mu
        .values()
        .iter()
        .map(|m| {
            let xi: f64 = rng.sample(StandardNormal);
            m + sigma * xi
        })
        .collect();
    Observation::new(values, sigma)
}

/// The linear estimate `h_i * Y_i`.
pub fn linear_estimate(y: &Observation, h: &Multiplier) -> Result<Vec<f64>> {
    check_len(y.len(), h.len())?;
    Ok(y.values().iter().zip(h.values()).map(|(y, h)| h * y).collect())
}

/// Mean square risk `||(1 - h) mu||^2 + sigma^2 ||h||^2` of the estimate `h * Y`.
pub fn exact_risk(h: &Multiplier, mu: &MeanVector, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_len(mu.len(), h.len())?;
    Ok(risk_unchecked(h.values(), mu.values(), sigma))
}

pub(crate) fn risk_unchecked(h: &[f64], mu: &[f64], sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    blocked_sum(h.len(), |i| {
        let bias = (1.0 - h[i]) * mu[i];
        bias * bias + s2 * h[i] * h[i]
    })
}

/// Unbiased risk estimate `||Y - h Y||^2 + 2 sigma^2 sum(h) - sigma^2 n`.
///
/// Its expectation equals [`exact_risk`]; individual values may be negative.
pub fn ure(y: &Observation, h: &Multiplier) -> Result<f64> {
    check_len(y.len(), h.len())?;
    let s2 = y.sigma() * y.sigma();
    let residual = residual_sq(y.values(), h.values());
    Ok(residual + 2.0 * s2 * h.l1_norm() - s2 * y.len() as f64)
}

/// `sum_i ((1 - h_i) y_i)^2`.
pub(crate) fn residual_sq(y: &[f64], h: &[f64]) -> f64 {
    blocked_sum(y.len(), |i| {
        let r = (1.0 - h[i]) * y[i];
        r * r
    })
}

/// Index of the smallest value; ties go to the member with the smallest
/// l1 norm, then to the smallest index.
pub(crate) fn argmin_smoothest(values: &[f64], l1_norms: &[f64]) -> usize {
    let mut best = 0;
    for j in 1..values.len() {
        let better = values[j] < values[best]
            || (values[j] == values[best] && l1_norms[j] < l1_norms[best]);
        if better {
            best = j;
        }
    }
    best
}

/// Oracle risk `min_h R(h, mu)` over the family and the index attaining it.
pub fn oracle_risk(family: &MultiplierFamily, mu: &MeanVector, sigma: f64) -> Result<(f64, usize)> {
    check_sigma(sigma)?;
    check_len(family.dim(), mu.len())?;
    let risks = family
        .members()
        .iter()
        .map(|h| risk_unchecked(h.values(), mu.values(), sigma))
        .collect::<Vec<_>>();
    let best = argmin_smoothest(&risks, family.l1_norms());
    Ok((risks[best], best))
}
