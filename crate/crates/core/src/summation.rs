//! Compensated accumulation.
//!
//! Long reductions (risks over n = 10^6 coordinates, Monte Carlo means over
//! 10^5 replications) go through [`Neumaier`] so that results do not depend on
//! summation error growth and are reproducible bit-for-bit for a fixed order.

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

const BLOCK: usize = 128;

/// Sums `term(i)` for `i in 0..len`.
///
/// Terms are accumulated naively inside blocks of 128 and the block totals are
/// combined with [`Neumaier`]. This keeps the error at roughly `128 * eps`
/// relative while leaving the inner loop cheap.
#[inline]
pub fn blocked_sum<F: Fn(usize) -> f64>(len: usize, term: F) -> f64 {
    let mut acc = Neumaier::new();
    let mut start = 0;
    while start < len {
        let end = (start + BLOCK).min(len);
        let mut partial = 0.0;
        for i in start..end {
            partial += term(i);
        }
        acc.add(partial);
        start = end;
    }
    acc.total()
}

/// Compensated sum of a slice.
pub fn sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<Neumaier>().total()
}
