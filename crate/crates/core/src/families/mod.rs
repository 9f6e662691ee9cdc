//! Ordered multiplier families.
//!
//! A family is a finite set of multipliers that is totally ordered
//! componentwise. Members are stored in ascending order, so `members()[0]` is
//! the smallest (most smoothing) multiplier and the last member is `h_max`.
//! The successor `h+` of a member is simply the next one in this order.

mod condition;
mod priors;

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Multiplier;
use crate::summation::blocked_sum;

pub use condition::{
    check_condition, condition_lower_all_pairs, prior_bounds, ConditionReport, PriorBounds,
};
pub use priors::{check_prior_identity, prior_weights, PriorWeights};

/// Members whose l1 gap to the next member is below this are merged.
pub const MERGE_GAP: f64 = 1e-10;

/// Penalty eigenvalues `lambda_1 <= ... <= lambda_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    tag: String,
}

impl Spectrum {
    pub fn new(eigenvalues: Vec<f64>, tag: impl Into<String>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidParameter("spectrum is empty".into()));
        }
        for (k, &l) in eigenvalues.iter().enumerate() {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "eigenvalue {k} = {l} must be finite and nonnegative"
                )));
            }
        }
        if let Some(k) = eigenvalues.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter(format!(
                "eigenvalues must be ascending (entry {} < entry {k})",
                k + 1
            )));
        }
        Ok(Self { eigenvalues, tag: tag.into() })
    }

    /// `lambda_k = scale * k^exponent` for `k = 1..=n`.
    pub fn polynomial(n: usize, exponent: f64, scale: f64) -> Result<Self> {
        if !(exponent.is_finite() && exponent >= 0.0 && scale.is_finite() && scale >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "polynomial spectrum needs nonnegative exponent and scale, got {exponent}, {scale}"
            )));
        }
        let values = (1..=n).map(|k| scale * (k as f64).powf(exponent)).collect();
        Self::new(values, format!("polynomial(exponent={exponent}, scale={scale})"))
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Tikhonov,
    Pinsker,
    Cutoff,
    Landweber,
    Custom,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FamilyKind::Tikhonov => "tikhonov",
            FamilyKind::Pinsker => "pinsker",
            FamilyKind::Cutoff => "cutoff",
            FamilyKind::Landweber => "landweber",
            FamilyKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// First violation found by [`validate_ordered`]. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum OrderViolation {
    Dimension { member: usize, expected: usize, found: usize },
    OutOfRange { member: usize, coordinate: usize, value: f64 },
    Increasing { member: usize, coordinate: usize },
    Crossing { first: usize, second: usize, coordinate: usize },
    Descending { first: usize, second: usize },
}

impl fmt::Display for OrderViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            OrderViolation::Dimension { member, expected, found } => {
                write!(f, "member {member} has length {found}, expected {expected}")
            }
            OrderViolation::OutOfRange { member, coordinate, value } => {
                write!(f, "member {member} coordinate {coordinate} = {value} is outside [0, 1]")
            }
            OrderViolation::Increasing { member, coordinate } => write!(
                f,
                "member {member} increases from coordinate {coordinate} to {}",
                coordinate + 1
            ),
            OrderViolation::Crossing { first, second, coordinate } => {
                write!(f, "members {first} and {second} cross at coordinate {coordinate}")
            }
            OrderViolation::Descending { first, second } => {
                write!(f, "member {first} lies above member {second}; family is not ascending")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrderVerdict {
    Valid,
    Invalid(OrderViolation),
}

impl OrderVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, OrderVerdict::Valid)
    }
}

/// Checks that `members`, in the given order, form an ascending set of
/// ordered multipliers: each lies in `[0, 1]`, is nonincreasing in the
/// coordinate, and consecutive members are comparable componentwise and
/// ascending. Comparability of consecutive pairs plus ascent gives a total
/// order by transitivity.
pub fn validate_ordered<M: AsRef<[f64]>>(members: &[M]) -> OrderVerdict {
    let Some(first) = members.first() else {
        return OrderVerdict::Valid;
    };
    let n = first.as_ref().len();
    for (j, m) in members.iter().enumerate() {
        let h = m.as_ref();
        if h.len() != n {
            return OrderVerdict::Invalid(OrderViolation::Dimension { member: j, expected: n, found: h.len() });
        }
        if let Some(i) = h.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return OrderVerdict::Invalid(OrderViolation::OutOfRange { member: j, coordinate: i, value: h[i] });
        }
        if let Some(i) = h.windows(2).position(|w| w[1] > w[0]) {
            return OrderVerdict::Invalid(OrderViolation::Increasing { member: j, coordinate: i });
        }
    }
    for j in 0..members.len().saturating_sub(1) {
        let (g, h) = (members[j].as_ref(), members[j + 1].as_ref());
        let mut direction = std::cmp::Ordering::Equal;
        for i in 0..n {
            let here = g[i].partial_cmp(&h[i]).unwrap_or(std::cmp::Ordering::Equal);
            if here == std::cmp::Ordering::Equal {
                continue;
            }
            if direction == std::cmp::Ordering::Equal {
                direction = here;
            } else if here != direction {
                return OrderVerdict::Invalid(OrderViolation::Crossing { first: j, second: j + 1, coordinate: i });
            }
        }
        if direction == std::cmp::Ordering::Greater {
            return OrderVerdict::Invalid(OrderViolation::Descending { first: j, second: j + 1 });
        }
    }
    OrderVerdict::Valid
}

/// A validated, duplicate-free, ascending family of ordered multipliers.
#[derive(Debug, Clone)]
pub struct MultiplierFamily {
    members: Vec<Multiplier>,
    l1_norms: Vec<f64>,
    sq_norms: Vec<f64>,
    /// `(1 - h_i)^2` per member, cached for the URE inner loop.
    one_minus_sq: Vec<Vec<f64>>,
    spectrum: Option<Spectrum>,
    params: Option<Vec<f64>>,
    kind: FamilyKind,
    merged: usize,
    fingerprint: u64,
}

impl MultiplierFamily {
    /// Builds a family from raw member vectors in any order.
    ///
    /// Members are sorted by l1 norm and validated. Exact duplicates are
    /// rejected; members closer than [`MERGE_GAP`] in l1 are merged into the
    /// larger one with a warning. `params` (smoothing parameters, cut points,
    /// iteration counts) travel with their members through the sort.
    pub fn from_members(
        members: Vec<Vec<f64>>,
        kind: FamilyKind,
        spectrum: Option<Spectrum>,
        params: Option<Vec<f64>>,
    ) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyFamily);
        }
        if let Some(p) = &params {
            if p.len() != members.len() {
                return Err(Error::Dimension { expected: members.len(), found: p.len() });
            }
        }
        let l1: Vec<f64> = members.iter().map(|h| blocked_sum(h.len(), |i| h[i])).collect();
        let mut order: Vec<usize> = (0..members.len()).collect();
        order.sort_by(|&a, &b| l1[a].total_cmp(&l1[b]));

        let sorted: Vec<Vec<f64>> = order.iter().map(|&j| members[j].clone()).collect();
        if let OrderVerdict::Invalid(v) = validate_ordered(&sorted) {
            return Err(Error::NotOrdered(v));
        }
        if let Some(j) = sorted.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::DuplicateMember { first: order[j], second: order[j + 1] });
        }
        let sorted_params = params.map(|p| order.iter().map(|&j| p[j]).collect::<Vec<_>>());

        let mut keep = vec![true; sorted.len()];
        let mut merged = 0;
        for j in 0..sorted.len() - 1 {
            let gap = l1_gap(&sorted[j], &sorted[j + 1]);
            if gap < MERGE_GAP {
                log::warn!("merging family members {j} and {} (l1 gap {gap:e})", j + 1);
                keep[j] = false;
                merged += 1;
            }
        }
        let members: Vec<Multiplier> = sorted
            .into_iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(h, _)| Multiplier::new(h))
            .collect::<Result<_>>()?;
        let params = sorted_params.map(|p| p.into_iter().zip(&keep).filter(|(_, &k)| k).map(|(v, _)| v).collect());
        if let Some(s) = &spectrum {
            if s.len() != members[0].len() {
                return Err(Error::Dimension { expected: members[0].len(), found: s.len() });
            }
        }

        let l1_norms = members.iter().map(Multiplier::l1_norm).collect();
        let sq_norms = members.iter().map(Multiplier::norm_sq).collect();
        let one_minus_sq = members
            .iter()
            .map(|h| h.values().iter().map(|v| (1.0 - v) * (1.0 - v)).collect())
            .collect();
        let mut hasher = DefaultHasher::new();
        for h in &members {
            for v in h.values() {
                v.to_bits().hash(&mut hasher);
            }
        }
        Ok(Self {
            members,
            l1_norms,
            sq_norms,
            one_minus_sq,
            spectrum,
            params,
            kind,
            merged,
            fingerprint: hasher.finish(),
        })
    }

    pub fn custom(members: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_members(members, FamilyKind::Custom, None, None)
    }

    pub fn members(&self) -> &[Multiplier] {
        &self.members
    }

    pub fn member(&self, j: usize) -> &Multiplier {
        &self.members[j]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Dimension `n` of every member.
    pub fn dim(&self) -> usize {
        self.members[0].len()
    }

    pub fn l1_norms(&self) -> &[f64] {
        &self.l1_norms
    }

    pub fn sq_norms(&self) -> &[f64] {
        &self.sq_norms
    }

    pub(crate) fn one_minus_sq(&self, j: usize) -> &[f64] {
        &self.one_minus_sq[j]
    }

    pub fn spectrum(&self) -> Option<&Spectrum> {
        self.spectrum.as_ref()
    }

    /// Smoothing parameters (alpha, cut point or iteration count) aligned with members.
    pub fn params(&self) -> Option<&[f64]> {
        self.params.as_deref()
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    /// Number of near-duplicate members merged at construction.
    pub fn merged(&self) -> usize {
        self.merged
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Index of the successor `h+`, `None` for `h_max`.
    pub fn successor(&self, j: usize) -> Option<usize> {
        (j + 1 < self.members.len()).then_some(j + 1)
    }

    /// l1 gap `||h+||_1 - ||h||_1`, computed coordinatewise.
    pub fn l1_gap(&self, j: usize) -> Option<f64> {
        self.successor(j).map(|k| l1_gap(self.members[j].values(), self.members[k].values()))
    }

    pub fn contains_zero(&self) -> bool {
        self.sq_norms[0] == 0.0
    }
}

pub(crate) fn l1_gap(g: &[f64], h: &[f64]) -> f64 {
    blocked_sum(g.len(), |i| h[i] - g[i])
}

fn check_grid(grid: &[f64], name: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if let Some(a) = grid.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {a}")));
    }
    let ascending = grid.windows(2).all(|w| w[1] > w[0]);
    let descending = grid.windows(2).all(|w| w[1] < w[0]);
    if !(ascending || descending) {
        let pos = grid
            .windows(3)
            .position(|w| (w[1] - w[0]).signum() != (w[2] - w[1]).signum() || w[1] == w[0])
            .map_or(1, |p| p + 1);
        return Err(Error::NonMonotoneGrid(pos));
    }
    Ok(())
}

/// Tikhonov (smoothing spline) multipliers `h_k = 1 / (1 + alpha lambda_k)`.
///
/// The grid may be given in either direction but must be strictly monotone;
/// members come out ascending, i.e. in decreasing alpha.
pub fn build_tikhonov(spectrum: &Spectrum, alpha_grid: &[f64]) -> Result<MultiplierFamily> {
    check_grid(alpha_grid, "alpha")?;
    let members = alpha_grid
        .iter()
        .map(|&a| spectrum.eigenvalues().iter().map(|&l| 1.0 / (1.0 + a * l)).collect())
        .collect();
    MultiplierFamily::from_members(members, FamilyKind::Tikhonov, Some(spectrum.clone()), Some(alpha_grid.to_vec()))
}

/// Pinsker multipliers `h_k = max(1 - alpha lambda_k, 0)`.
pub fn build_pinsker(spectrum: &Spectrum, alpha_grid: &[f64]) -> Result<MultiplierFamily> {
    check_grid(alpha_grid, "alpha")?;
    let members = alpha_grid
        .iter()
        .map(|&a| spectrum.eigenvalues().iter().map(|&l| (1.0 - a * l).max(0.0)).collect())
        .collect();
    MultiplierFamily::from_members(members, FamilyKind::Pinsker, Some(spectrum.clone()), Some(alpha_grid.to_vec()))
}

/// Spectral cut-off: `h_i = 1` for `i <= m`, else `0`.
pub fn build_cutoff(n: usize, cut_points: &[usize]) -> Result<MultiplierFamily> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if cut_points.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if let Some(m) = cut_points.iter().find(|&&m| m > n) {
        return Err(Error::InvalidParameter(format!("cut point {m} is outside [0, {n}]")));
    }
    if let Some(p) = cut_points.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotoneGrid(p + 1));
    }
    let members = cut_points
        .iter()
        .map(|&m| (0..n).map(|i| if i < m { 1.0 } else { 0.0 }).collect())
        .collect();
    let params = cut_points.iter().map(|&m| m as f64).collect();
    MultiplierFamily::from_members(members, FamilyKind::Cutoff, None, Some(params))
}

/// Landweber iteration after `m` steps of size `step`:
/// `h = 1 - (1 - step * lambda)^m`.
///
/// Coordinates are matched to eigenvalues in descending order (coordinate 1
/// carries the largest eigenvalue), which makes every member nonincreasing.
pub fn build_landweber(spectrum: &Spectrum, step: f64, iteration_counts: &[u32]) -> Result<MultiplierFamily> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
    }
    let top = spectrum.eigenvalues().last().copied().unwrap_or(0.0);
    if step * top > 1.0 {
        return Err(Error::Unstable(step * top));
    }
    if iteration_counts.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if iteration_counts.contains(&0) {
        return Err(Error::InvalidParameter("iteration counts must be positive".into()));
    }
    if let Some(p) = iteration_counts.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotoneGrid(p + 1));
    }
    let members = iteration_counts
        .iter()
        .map(|&m| {
            spectrum
                .eigenvalues()
                .iter()
                .rev()
                .map(|&l| -(f64::from(m) * (-step * l).ln_1p()).exp_m1())
                .map(|h| h.clamp(0.0, 1.0))
                .collect()
        })
        .collect();
    let params = iteration_counts.iter().map(|&m| f64::from(m)).collect();
    MultiplierFamily::from_members(members, FamilyKind::Landweber, Some(spectrum.clone()), Some(params))
}

/// `count` points from `min` to `max`, geometric or linear.
pub fn grid(min: f64, max: f64, count: usize, geometric: bool) -> Result<Vec<f64>> {
    if count == 0 || !(min.is_finite() && max.is_finite()) || min > max || (count > 1 && min == max) {
        return Err(Error::InvalidParameter(format!("bad grid [{min}, {max}] x {count}")));
    }
    if geometric && min <= 0.0 {
        return Err(Error::InvalidParameter("geometric grid needs a positive minimum".into()));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let last = (count - 1) as f64;
    Ok((0..count)
        .map(|j| {
            let t = j as f64 / last;
            if geometric {
                (min.ln() + t * (max.ln() - min.ln())).exp()
            } else {
                min + t * (max - min)
            }
        })
        .collect())
}
