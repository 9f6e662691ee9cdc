use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{
    build_cutoff, build_landweber, build_pinsker, build_tikhonov, grid, prior_weights, MultiplierFamily,
    PriorWeights, Spectrum,
};
use crate::model::{check_sigma, MeanVector};

pub const DEFAULT_BETA: f64 = 4.0;

fn default_beta() -> f64 {
    DEFAULT_BETA
}

/// Mean vector generator, indexed from `k = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeanSpec {
    /// `mu_k = amplitude * k^(-smoothness)`
    Sobolev { amplitude: f64, smoothness: f64 },
    /// `mu_k = amplitude * exp(-rate * k)`
    Analytic { amplitude: f64, rate: f64 },
    /// `mu_k = amplitude` on the 1-based `support`, zero elsewhere.
    Sparse { amplitude: f64, support: Vec<usize> },
    Zero,
    Constant { amplitude: f64 },
}

impl MeanSpec {
    pub fn generate(&self, n: usize) -> Result<MeanVector> {
        let k = |i: usize| (i + 1) as f64;
        let values: Vec<f64> = match self {
            MeanSpec::Sobolev { amplitude, smoothness } => (0..n).map(|i| amplitude * k(i).powf(-smoothness)).collect(),
            MeanSpec::Analytic { amplitude, rate } => (0..n).map(|i| amplitude * (-rate * k(i)).exp()).collect(),
            MeanSpec::Sparse { amplitude, support } => {
                let mut v = vec![0.0; n];
                for &s in support {
                    if s == 0 || s > n {
                        return Err(Error::Config(format!("sparse support index {s} is outside 1..={n}")));
                    }
                    v[s - 1] = *amplitude;
                }
                v
            }
            MeanSpec::Zero => vec![0.0; n],
            MeanSpec::Constant { amplitude } => vec![*amplitude; n],
        };
        MeanVector::new(values)
    }

    /// The same generator with its amplitude multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            MeanSpec::Sobolev { amplitude, .. }
            | MeanSpec::Analytic { amplitude, .. }
            | MeanSpec::Sparse { amplitude, .. }
            | MeanSpec::Constant { amplitude } => *amplitude *= c,
            MeanSpec::Zero => {}
        }
        out
    }
}

/// Either `lambda_k = scale * k^polynomial` or an explicit ascending list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polynomial: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl SpectrumSpec {
    pub fn polynomial(exponent: f64) -> Self {
        Self { polynomial: Some(exponent), scale: None, values: None }
    }

    pub fn build(&self, n: usize) -> Result<Spectrum> {
        match (&self.polynomial, &self.values) {
            (Some(p), None) => Spectrum::polynomial(n, *p, self.scale.unwrap_or(1.0)),
            (None, Some(v)) => {
                if self.scale.is_some() {
                    return Err(Error::Config("spectrum `scale` only applies to `polynomial`".into()));
                }
                if v.len() != n {
                    return Err(Error::Dimension { expected: n, found: v.len() });
                }
                Spectrum::new(v.clone(), "explicit")
            }
            _ => Err(Error::Config("spectrum needs exactly one of `polynomial` or `values`".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Geometric,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        grid(self.min, self.max, self.count, self.spacing == Spacing::Geometric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FamilySpec {
    Tikhonov {
        spectrum: SpectrumSpec,
        alpha: GridSpec,
    },
    Pinsker {
        spectrum: SpectrumSpec,
        alpha: GridSpec,
    },
    /// Projections keeping the first `cut` coordinates; either explicit cuts
    /// or every multiple of `step` from 0 to `n`.
    Cutoff {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cuts: Option<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        step: Option<usize>,
    },
    Landweber {
        spectrum: SpectrumSpec,
        step: f64,
        counts: Vec<u32>,
    },
    Custom {
        members: Vec<Vec<f64>>,
    },
}

impl FamilySpec {
    pub fn build(&self, n: usize) -> Result<MultiplierFamily> {
        let family = match self {
            FamilySpec::Tikhonov { spectrum, alpha } => build_tikhonov(&spectrum.build(n)?, &alpha.values()?)?,
            FamilySpec::Pinsker { spectrum, alpha } => build_pinsker(&spectrum.build(n)?, &alpha.values()?)?,
            FamilySpec::Cutoff { cuts, step } => {
                let cuts = match (cuts, step) {
                    (Some(c), None) => c.clone(),
                    (None, Some(s)) if *s > 0 => {
                        let mut c: Vec<usize> = (0..=n).step_by(*s).collect();
                        if c.last() != Some(&n) {
                            c.push(n);
                        }
                        c
                    }
                    (None, Some(_)) => return Err(Error::Config("cutoff `step` must be positive".into())),
                    _ => return Err(Error::Config("cutoff needs exactly one of `cuts` or `step`".into())),
                };
                build_cutoff(n, &cuts)?
            }
            FamilySpec::Landweber { spectrum, step, counts } => build_landweber(&spectrum.build(n)?, *step, counts)?,
            FamilySpec::Custom { members } => MultiplierFamily::custom(members.clone())?,
        };
        if family.dim() != n {
            return Err(Error::Dimension { expected: n, found: family.dim() });
        }
        Ok(family)
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub n: usize,
    pub sigma: f64,
    pub mean: MeanSpec,
    pub family: FamilySpec,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub replications: usize,
    pub seed: u64,
}

/// The deterministic ingredients of a scenario.
#[derive(Debug, Clone)]
pub struct ScenarioContext {
    pub mu: MeanVector,
    pub family: MultiplierFamily,
    pub priors: PriorWeights,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config(format!("scenario `{}`: n must be positive", self.name)));
        }
        check_sigma(self.sigma)?;
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("scenario `{}`: beta must be positive, got {}", self.name, self.beta)));
        }
        if self.replications == 0 {
            return Err(Error::Config(format!("scenario `{}`: replications must be positive", self.name)));
        }
        Ok(())
    }

    pub fn context(&self) -> Result<ScenarioContext> {
        self.validate()?;
        let mu = self.mean.generate(self.n)?;
        let family = self.family.build(self.n)?;
        let priors = prior_weights(&family, self.beta)?;
        Ok(ScenarioContext { mu, family, priors })
    }

    /// The aggregate's risk bounds are only claimed for `beta >= 4`.
    pub fn theory_applicable(&self) -> bool {
        self.beta >= 4.0
    }

    pub fn with_scaled_mean(&self, c: f64) -> Self {
        Self { mean: self.mean.scaled(c), ..self.clone() }
    }
}
