//! Sup/inf brackets of `B(eta, D \ A; D)` over chords `eta` in shrinking
//! lenses `A_eps` around the diameter of `(D; -1, 1)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::conformal::{region_contains, Chart, CurvePath, ExtPoint, Marked, Region};
use crate::loop_soup::{run, Functional, LoopParams, LoopProblem, LoopQuery, LoopSet};
use crate::rng::{uniform, StreamKey};
use crate::{Error, Result, C64};
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

#[derive(Clone, Debug)]
pub struct UniformConfig {
    /// Angle of the fixed outer lens `A`.
    pub eps_outer: f64,
    /// Inner lens angles, decreasing.
    pub eps_grid: Vec<f64>,
    /// Sampled chords per angle.
    pub curves: usize,
    pub loops: LoopParams,
    /// Vertices per sampled chord.
    pub points: usize,
    pub lens_resolution: usize,
}

impl UniformConfig {
    pub fn new(eps_outer: f64, eps_grid: Vec<f64>, samples: u64, seed: u64) -> Self {
        UniformConfig {
            eps_outer,
            eps_grid,
            curves: 6,
            loops: LoopParams::new(samples, seed).with_stream("uniform"),
            points: 200,
            lens_resolution: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BracketPoint {
    pub eps: f64,
    pub sup: f64,
    pub inf: f64,
    pub width: f64,
    /// Paired standard error of `width`.
    pub width_stderr: f64,
    /// Whether `[inf, sup]` contains the diameter's value within 2 sigma.
    pub brackets_gamma: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniformReport {
    /// `B(gamma, D \ A; D)` for the diameter.
    pub gamma: f64,
    pub gamma_stderr: f64,
    pub points: Vec<BracketPoint>,
    /// Width drop between consecutive angles over its paired stderr.
    pub narrowing_sigmas: Vec<f64>,
    /// Width drop from the first to the last angle over its paired stderr.
    pub total_narrowing_sigma: f64,
    /// No step widens by more than 2 sigma and the total drop exceeds 2 sigma.
    pub pass: bool,
}

/// Chord `s + i u h(s)` with `h` a random sine series, `u` as large as the
/// lens allows times `fill`.
fn sample_chord(lens: &Region, key: &StreamKey, index: u64, fill: f64, n: usize) -> Result<CurvePath> {
    let mut rng = key.rng(index);
    let a: Vec<f64> = (0..3).map(|_| 2.0 * uniform(&mut rng) - 1.0).collect();
    let shape = |s: f64| -> f64 {
        let x = core::f64::consts::FRAC_PI_2 * (s + 1.0);
        a[0] * x.sin() + 0.5 * a[1] * (2.0 * x).sin() + 0.33 * a[2] * (3.0 * x).sin()
    };
    let chord = |u: f64| -> CurvePath {
        let pts = (0..=n)
            .map(|k| {
                let s = -1.0 + 2.0 * k as f64 / n as f64;
                C64::new(s, u * shape(s))
            })
            .collect();
        CurvePath::new(Chart::D, pts).with_marked(Marked {
            start: Some(ExtPoint::Finite(C64::new(-1.0, 0.0))),
            end: Some(ExtPoint::Finite(C64::new(1.0, 0.0))),
            target: None,
        })
    };
    let fits = |u: f64| region_contains(lens, &chord(u), 1e-4, 1e-6);
    let (mut lo, mut hi) = (0.0, 4.0);
    if fits(hi)? {
        lo = hi;
    } else {
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if fits(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    Ok(chord(lo * fill))
}

fn inside(c: &CurvePath) -> CurvePath {
    let pts = c
        .points
        .iter()
        .map(|&z| if z.norm() > 1.0 - 1e-9 { z / z.norm() * (1.0 - 1e-9) } else { z })
        .collect();
    CurvePath::new(Chart::D, pts)
}

pub fn uniform_convergence_proxy(cfg: &UniformConfig) -> Result<UniformReport> {
    if cfg.eps_grid.len() < 2 || cfg.eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("need at least two decreasing lens angles"));
    }
    if cfg.eps_grid[0] >= cfg.eps_outer || cfg.curves == 0 {
        return Err(Error::invalid("inner lenses must lie inside the outer lens"));
    }
    let outer = Region::chordal_lens(cfg.eps_outer, cfg.lens_resolution)?;
    let key = StreamKey::root(cfg.loops.seed).child("uniform-chords");
    let mut chords = vec![inside(&CurvePath::new(
        Chart::D,
        (0..=cfg.points).map(|k| C64::new(-1.0 + 2.0 * k as f64 / cfg.points as f64, 0.0)).collect(),
    ))];
    for (e, &eps) in cfg.eps_grid.iter().enumerate() {
        let lens = Region::chordal_lens(eps, cfg.lens_resolution)?;
        for j in 0..cfg.curves {
            // Half the chords hug the lens boundary.
            let fill = if j % 2 == 0 { 0.97 } else { 0.6 };
            let idx = (e * cfg.curves + j) as u64;
            chords.push(inside(&sample_chord(&lens, &key, idx, fill, cfg.points)?));
        }
    }
    let out = LoopSet::outside(&outer)?;
    let sets: Vec<LoopSet> = chords.iter().map(LoopSet::curve).collect::<Result<_>>()?;
    let mut all: Vec<&LoopSet> = vec![&out];
    all.extend(sets.iter());
    let disk = Region::domain(Chart::D);
    let problem = LoopProblem {
        domains: vec![&disk],
        sets: all,
        queries: (0..chords.len())
            .map(|i| LoopQuery {
                domains: vec![0],
                functional: Functional::AllHit(vec![0, i + 1]),
            })
            .collect(),
    };
    let r = run(&problem, &cfg.loops)?;
    let q = chords.len();
    let g = r.estimate(0);
    let mut points = Vec::with_capacity(cfg.eps_grid.len());
    let mut extremes = Vec::new();
    for (e, &eps) in cfg.eps_grid.iter().enumerate() {
        // The diameter itself lies in every lens.
        let idx: Vec<usize> = core::iter::once(0).chain((0..cfg.curves).map(|j| 1 + e * cfg.curves + j)).collect();
        let vals: Vec<f64> = idx.iter().map(|&i| r.estimate(i).mean).collect();
        let (mut hi, mut lo) = (0, 0);
        for k in 0..vals.len() {
            if vals[k] > vals[hi] {
                hi = k;
            }
            if vals[k] < vals[lo] {
                lo = k;
            }
        }
        let mut w = vec![0.0; q];
        w[idx[hi]] += 1.0;
        w[idx[lo]] -= 1.0;
        let width = r.combination(&w);
        let up = r.combination(&{
            let mut c = vec![0.0; q];
            c[idx[hi]] = 1.0;
            c[0] -= 1.0;
            c
        });
        let down = r.combination(&{
            let mut c = vec![0.0; q];
            c[0] = 1.0;
            c[idx[lo]] -= 1.0;
            c
        });
        extremes.push((idx[hi], idx[lo]));
        points.push(BracketPoint {
            eps,
            sup: vals[hi],
            inf: vals[lo],
            width: width.mean,
            width_stderr: width.stderr,
            brackets_gamma: up.mean >= -2.0 * up.stderr && down.mean >= -2.0 * down.stderr,
        });
    }
    let drop = |k: usize, l: usize| -> f64 {
        let mut w = vec![0.0; q];
        w[extremes[k].0] += 1.0;
        w[extremes[k].1] -= 1.0;
        w[extremes[l].0] -= 1.0;
        w[extremes[l].1] += 1.0;
        let d = r.combination(&w);
        if d.stderr > 0.0 {
            d.mean / d.stderr
        } else if d.mean == 0.0 {
            0.0
        } else {
            d.mean.signum() * f64::INFINITY
        }
    };
    let narrowing_sigmas: Vec<f64> = (0..extremes.len() - 1).map(|k| drop(k, k + 1)).collect();
    let total_narrowing_sigma = drop(0, extremes.len() - 1);
    let pass = narrowing_sigmas.iter().all(|&s| s >= -2.0) && total_narrowing_sigma > 2.0;
    Ok(UniformReport {
        gamma: g.mean,
        gamma_stderr: g.stderr,
        points,
        narrowing_sigmas,
        total_narrowing_sigma,
        pass,
    })
}
