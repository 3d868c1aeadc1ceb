//! Monte Carlo estimates and mergeable accumulators.

use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

/// Sampling window of a loop-measure estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub t_min: f64,
    pub t_max: f64,
    /// `[x_min, x_max, y_min, y_max]` of the root box.
    pub root_box: [f64; 4],
    /// Upper bound on the mass of loops with duration below `t_min` that
    /// could contribute.
    pub bias_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: Option<u64>,
    pub window: Option<Window>,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            mean: value,
            stderr: 0.0,
            n_samples: 0,
            seed: None,
            window: None,
        }
    }

    /// Difference of two independent estimates.
    pub fn minus_independent(&self, other: &Estimate) -> Estimate {
        Estimate {
            mean: self.mean - other.mean,
            stderr: self.stderr.hypot(other.stderr),
            n_samples: self.n_samples.min(other.n_samples),
            seed: None,
            window: None,
        }
    }

    pub fn scaled(&self, a: f64) -> Estimate {
        Estimate {
            mean: a * self.mean,
            stderr: a.abs() * self.stderr,
            ..*self
        }
    }

    /// Upper end of a one-sided normal confidence interval at `z` standard errors.
    pub fn upper(&self, z: f64) -> f64 {
        self.mean + z * self.stderr
    }
}

/// Running mean/variance (Chan et al. merge, so chunked sums can be combined
/// in any fixed order).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Accumulator {
    pub n: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        self.mean += d * w;
        self.m2 += other.m2 + d * d * self.n as f64 * w;
        self.n = n;
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean,
            stderr: if self.n > 0 {
                (self.variance() / self.n as f64).sqrt()
            } else {
                0.0
            },
            n_samples: self.n,
            seed: None,
            window: None,
        }
    }
}

/// Joint accumulator for several functionals of the same samples, so that
/// any linear combination gets a correct (paired) standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiAccumulator {
    pub n: u64,
    k: usize,
    sum: Vec<f64>,
    cross: Vec<f64>,
}

impl MultiAccumulator {
    pub fn new(k: usize) -> Self {
        MultiAccumulator {
            n: 0,
            k,
            sum: vec![0.0; k],
            cross: vec![0.0; k * k],
        }
    }

    #[inline]
    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.k);
        self.n += 1;
        for i in 0..self.k {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            self.sum[i] += xi;
            for j in 0..self.k {
                self.cross[i * self.k + j] += xi * x[j];
            }
        }
    }

    pub fn merge(&mut self, other: &MultiAccumulator) {
        assert_eq!(self.k, other.k);
        self.n += other.n;
        for i in 0..self.k {
            self.sum[i] += other.sum[i];
        }
        for i in 0..self.k * self.k {
            self.cross[i] += other.cross[i];
        }
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn mean(&self, i: usize) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum[i] / self.n as f64
        }
    }

    /// Estimate of `sum_i c_i E[X_i]`.
    pub fn combination(&self, c: &[f64]) -> Estimate {
        let n = self.n as f64;
        let mut mean = 0.0;
        for i in 0..self.k {
            mean += c[i] * self.mean(i);
        }
        let mut second = 0.0;
        for i in 0..self.k {
            for j in 0..self.k {
                second += c[i] * c[j] * self.cross[i * self.k + j];
            }
        }
        let var = if self.n > 1 {
            ((second / n - mean * mean) * n / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            stderr: if self.n > 0 { (var / n).sqrt() } else { 0.0 },
            n_samples: self.n,
            seed: None,
            window: None,
        }
    }

    pub fn estimate(&self, i: usize) -> Estimate {
        let mut c = vec![0.0; self.k];
        c[i] = 1.0;
        self.combination(&c)
    }
}

/// Merge-friendly fold over sample indices `0..n`.
///
/// Samples are grouped in fixed chunks; chunk results are merged in chunk
/// order, so the output is identical for every thread count.
pub fn fold_indexed<A, F, M>(n: u64, make: M, f: F) -> A
where
    A: Mergeable + Send,
    F: Fn(u64, &mut A) + Sync,
    M: Fn() -> A + Sync,
{
    const CHUNK: u64 = 4096;
    let chunks = n.div_ceil(CHUNK);
    let run = |c: u64| {
        let mut acc = make();
        let end = ((c + 1) * CHUNK).min(n);
        for i in c * CHUNK..end {
            f(i, &mut acc);
        }
        acc
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<A> = {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<A> = (0..chunks).map(run).collect();
    let mut total = make();
    for p in &parts {
        total.merge_from(p);
    }
    total
}

pub trait Mergeable {
    fn merge_from(&mut self, other: &Self);
}

impl Mergeable for Accumulator {
    fn merge_from(&mut self, other: &Self) {
        self.merge(other)
    }
}

impl Mergeable for MultiAccumulator {
    fn merge_from(&mut self, other: &Self) {
        self.merge(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_merge_matches_sequential() {
        let xs: Vec<f64> = (0..10_000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut seq = Accumulator::new();
        for &x in &xs {
            seq.push(x);
        }
        let par = fold_indexed(xs.len() as u64, Accumulator::new, |i, a| a.push(xs[i as usize]));
        assert_eq!(seq.n, par.n);
        assert!((seq.mean() - par.mean()).abs() < 1e-12);
        assert!((seq.variance() - par.variance()).abs() < 1e-9);
    }

    #[test]
    fn paired_difference_of_identical_columns_is_exactly_zero() {
        let mut m = MultiAccumulator::new(2);
        for i in 0..1000 {
            let x = (i % 3) as f64;
            m.push(&[x, x]);
        }
        let d = m.combination(&[1.0, -1.0]);
        assert_eq!(d.mean, 0.0);
        assert_eq!(d.stderr, 0.0);
    }
}
