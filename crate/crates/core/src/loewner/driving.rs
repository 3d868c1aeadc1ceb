//! Driving functions on capacity grids.

use alloc::vec::Vec;

use crate::{Error, Result};
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DrivingKind {
    Chordal,
    Radial,
}

impl DrivingKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DrivingKind::Chordal => "chordal",
            DrivingKind::Radial => "radial",
        }
    }
}

/// Real path `W(t_k)` (chordal) or `U(t_k)` (radial), interpolated linearly.
#[derive(Clone, Debug, PartialEq)]
pub struct DrivingFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: DrivingKind,
}

impl DrivingFunction {
    pub fn new(kind: DrivingKind, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::invalid("driving grid and values differ in length"));
        }
        if grid.is_empty() {
            return Err(Error::invalid("driving function needs at least one point"));
        }
        if grid[0] != 0.0 {
            return Err(Error::invalid("driving grid must start at t = 0"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("driving grid must be strictly increasing"));
        }
        if grid.iter().chain(values.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "driving function" });
        }
        Ok(DrivingFunction { grid, values, kind })
    }

    pub fn uniform_grid(t_end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
    }

    /// Samples `f` on `n` uniform capacity steps of `[0, t_end]`.
    pub fn from_fn(kind: DrivingKind, t_end: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let grid = Self::uniform_grid(t_end, n);
        let values = grid.iter().map(|&t| f(t)).collect();
        Self::new(kind, grid, values)
    }

    pub fn from_grid(kind: DrivingKind, grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(|&t| f(t)).collect();
        Self::new(kind, grid, values)
    }

    pub fn zero(kind: DrivingKind, t_end: f64, n: usize) -> Self {
        Self::from_fn(kind, t_end, n, |_| 0.0).expect("valid grid")
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Piecewise-linear interpolant.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.grid.len();
        if n == 1 || t <= self.grid[0] {
            return self.values[0];
        }
        if t >= self.grid[n - 1] {
            return self.values[n - 1];
        }
        let k = match self.grid.binary_search_by(|g| g.partial_cmp(&t).unwrap()) {
            Ok(k) => return self.values[k],
            Err(k) => k - 1,
        };
        let s = (t - self.grid[k]) / (self.grid[k + 1] - self.grid[k]);
        self.values[k] + s * (self.values[k + 1] - self.values[k])
    }

    /// `(dt_k, dW_k)` for every step.
    pub fn increments(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, w)| (t[1] - t[0], w[1] - w[0]))
    }

    /// Restriction to the first `steps` steps.
    pub fn truncated(&self, steps: usize) -> DrivingFunction {
        let m = (steps + 1).min(self.grid.len());
        DrivingFunction {
            grid: self.grid[..m].to_vec(),
            values: self.values[..m].to_vec(),
            kind: self.kind,
        }
    }

    /// Driving function of the curve scaled by `lambda > 0`:
    /// `W_lambda(t) = lambda W(t / lambda^2)`.
    pub fn scaled(&self, lambda: f64) -> DrivingFunction {
        DrivingFunction {
            grid: self.grid.iter().map(|t| t * lambda * lambda).collect(),
            values: self.values.iter().map(|w| w * lambda).collect(),
            kind: self.kind,
        }
    }

    /// Rebuilds the path from increments, starting at `start`.
    pub fn from_increments(kind: DrivingKind, grid: Vec<f64>, start: f64, dw: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(dw.len() + 1);
        let mut w = start;
        values.push(w);
        for d in dw {
            w += d;
            values.push(w);
        }
        Self::new(kind, grid, values)
    }

    pub fn increments_vec(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Sup of `|W - f|` over the piecewise-linear interpolant, sampled
    /// `oversample` times per step.
    pub fn sup_error(&self, f: impl Fn(f64) -> f64, oversample: usize) -> f64 {
        let m = oversample.max(1);
        let mut d: f64 = (self.values[0] - f(self.grid[0])).abs();
        for k in 0..self.steps() {
            let (t0, t1) = (self.grid[k], self.grid[k + 1]);
            for j in 1..=m {
                let t = t0 + (t1 - t0) * j as f64 / m as f64;
                d = d.max((self.value_at(t) - f(t)).abs());
            }
        }
        d
    }

    pub fn sup_distance(&self, other: &DrivingFunction) -> f64 {
        let mut d: f64 = 0.0;
        for (&t, &v) in self.grid.iter().zip(&self.values) {
            d = d.max((v - other.value_at(t)).abs());
        }
        for (&t, &v) in other.grid.iter().zip(&other.values) {
            d = d.max((v - self.value_at(t)).abs());
        }
        d
    }
}

/// Grid with geometrically growing steps: `n` steps from `t1` to `t_end`,
/// preceded by `n_init` uniform steps on `[0, t1]`.
pub fn geometric_grid(t1: f64, t_end: f64, n_init: usize, n: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(n_init + n + 1);
    for k in 0..n_init {
        g.push(t1 * k as f64 / n_init as f64);
    }
    let r = (t_end / t1).ln() / n as f64;
    for k in 0..=n {
        g.push(t1 * (r * k as f64).exp());
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(DrivingFunction::new(DrivingKind::Chordal, alloc::vec![0.0, 0.0], alloc::vec![0.0, 1.0]).is_err());
        assert!(DrivingFunction::new(DrivingKind::Chordal, alloc::vec![0.1, 0.2], alloc::vec![0.0, 1.0]).is_err());
        assert!(DrivingFunction::new(DrivingKind::Chordal, alloc::vec![0.0], alloc::vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn interpolation() {
        let d = DrivingFunction::from_fn(DrivingKind::Chordal, 1.0, 4, |t| 2.0 * t).unwrap();
        assert!((d.value_at(0.3) - 0.6).abs() < 1e-15);
        assert_eq!(d.value_at(2.0), 2.0);
        let g = geometric_grid(0.01, 100.0, 5, 10);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!((g.last().unwrap() - 100.0).abs() < 1e-9);
    }
}
