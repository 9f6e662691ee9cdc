use serde::{Deserialize, Serialize};

use crate::summation::Neumaier;

/// Monte Carlo mean with its standard error `sd / sqrt(R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    /// Two-pass estimate over `values` in their given order.
    pub fn from_values(values: &[f64]) -> Self {
        let r = values.len();
        if r == 0 {
            return Self { mean: f64::NAN, se: f64::NAN };
        }
        let mean = values.iter().copied().collect::<Neumaier>().total() / r as f64;
        if r == 1 {
            return Self { mean, se: f64::NAN };
        }
        let ss = values.iter().map(|v| (v - mean) * (v - mean)).collect::<Neumaier>().total();
        let sd = (ss / (r - 1) as f64).sqrt();
        Self { mean, se: sd / (r as f64).sqrt() }
    }

    pub fn from_fn<F: Fn(usize) -> f64>(len: usize, f: F) -> Self {
        let values: Vec<f64> = (0..len).map(f).collect();
        Self::from_values(&values)
    }
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + end - 1) as f64 / 2.0 + 1.0;
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. `NaN` when either
/// input is constant or shorter than two.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman inputs must have equal length");
    if x.len() < 2 {
        return f64::NAN;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let m = (x.len() as f64 + 1.0) / 2.0;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - m) * (b - m);
        sxx += (a - m) * (a - m);
        syy += (b - m) * (b - m);
    }
    sxy / (sxx * syy).sqrt()
}
