use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GRID_POINTS: usize = 200;
/// The search grid spans `[eps_max * 1e-8, eps_max]` on a log scale.
const GRID_DECADES: f64 = 8.0;
const GOLDEN_ITERS: usize = 100;

/// Remainder correction `Psi(x) = C min_{0 < eps <= 1/(5 beta)} [eps x + 1/eps + exp(C/eps)]`.
///
/// `C` is a free constant; reports default to `C = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiFunction {
    pub c: f64,
    pub beta: f64,
}

impl PsiFunction {
    pub fn new(c: f64, beta: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("psi needs positive C and beta, got {c}, {beta}")));
        }
        Ok(Self { c, beta })
    }

    pub fn eps_max(&self) -> f64 {
        1.0 / (5.0 * self.beta)
    }

    fn objective(&self, x: f64, eps: f64) -> f64 {
        eps * x + 1.0 / eps + (self.c / eps).exp()
    }

    /// Minimising `eps` and `Psi(x)`.
    ///
    /// A 200-point log grid locates the basin; golden-section search refines
    /// it between the grid neighbours. The upper boundary is always a candidate.
    pub fn evaluate_with_eps(&self, x: f64) -> (f64, f64) {
        assert!(x >= 0.0, "psi is defined for x >= 0, got {x}");
        let hi = self.eps_max();
        let lo = hi * 10f64.powf(-GRID_DECADES);
        let step = (hi.ln() - lo.ln()) / (GRID_POINTS - 1) as f64;
        let grid: Vec<f64> = (0..GRID_POINTS)
            .map(|k| if k == GRID_POINTS - 1 { hi } else { (lo.ln() + step * k as f64).exp() })
            .collect();
        let values: Vec<f64> = grid.iter().map(|&e| self.objective(x, e)).collect();
        let best = (0..GRID_POINTS).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(GRID_POINTS - 1);

        let mut candidates = vec![(grid[best], values[best])];
        let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(GRID_POINTS - 1)]);
        if b > a {
            let ratio = (5f64.sqrt() - 1.0) / 2.0;
            let mut c = b - ratio * (b - a);
            let mut d = a + ratio * (b - a);
            let (mut fc, mut fd) = (self.objective(x, c), self.objective(x, d));
            for _ in 0..GOLDEN_ITERS {
                if fc <= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - ratio * (b - a);
                    fc = self.objective(x, c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + ratio * (b - a);
                    fd = self.objective(x, d);
                }
                if b - a <= 1e-15 * b {
                    break;
                }
            }
            candidates.push((c, fc));
            candidates.push((d, fd));
        }
        candidates.push((hi, self.objective(x, hi)));
        let (eps, value) = candidates.into_iter().min_by(|p, q| p.1.total_cmp(&q.1)).unwrap_or((hi, f64::INFINITY));
        (eps, self.c * value)
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.evaluate_with_eps(x).1
    }

    /// `Psi(x) log(x) / x`, which tends to `C` as `x` grows.
    pub fn asymptotic_ratio(&self, x: f64) -> f64 {
        self.evaluate(x) * x.ln() / x
    }
}

/// Exponential-weighting remainder bound `2 beta sigma^2 log(x + Psi(x))`
/// with `x = r / sigma^2`.
pub fn log_remainder_bound(psi: &PsiFunction, oracle_risk: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    let x = oracle_risk / s2;
    2.0 * psi.beta * s2 * (x + psi.evaluate(x)).ln()
}

/// Square-root remainder shape `sigma^2 sqrt(1 + r / sigma^2)` of the URE
/// minimizer's bound, without its unknown constant.
pub fn sqrt_remainder_shape(oracle_risk: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    s2 * (1.0 + oracle_risk / s2).sqrt()
}
