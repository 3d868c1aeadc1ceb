//! Onsager-Machlup ratio experiment for chordal SLE in `(D; -1, 1)`.
//!
//! Traces are drawn once per path and tested against the geodesic lenses
//! `A_eps` (for the diameter) and their images `f(A_eps)` (for `f` of the
//! diameter), with the chordal trace re-normalized to each pair of marked
//! points, so both stay probabilities share every path.

use alloc::vec;
use alloc::vec::Vec;

use super::{conformality_check, paired_loop_difference, ray_chord};
use crate::conformal::{Chart, Configuration, CurvePath, ExtPoint, MapChain, Region, TiltedSlit};
use crate::energies::constants::{c, displayed_coefficients};
use crate::energies::{chord_normalizer, chordal_potential, kernel, Case, Truncation};
use crate::estimate::{fold_indexed, Mergeable};
use crate::loewner::{geometric_grid, DrivingFunction};
use crate::loop_soup::LoopParams;
use crate::sle::{path_stream, sample_driving, SleConfig};
use crate::{Error, Result, C64};
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

#[derive(Clone, Debug)]
pub struct OmConfig {
    pub kappa: f64,
    /// Lens angles, decreasing.
    pub eps_grid: Vec<f64>,
    /// Lens on which `map` is conformal; must exceed every grid angle.
    pub eps_domain: f64,
    pub map: MapChain,
    pub paths: u64,
    pub seed: u64,
    /// Geometric capacity grid `[t_first, t_last]` with `steps` steps.
    pub t_first: f64,
    pub t_last: f64,
    pub steps: usize,
    /// Stayers per angle used for the bias allowance.
    pub allowance_curves: usize,
    pub allowance_loops: u64,
    pub lens_resolution: usize,
}

impl OmConfig {
    pub fn new(kappa: f64, eps_grid: Vec<f64>, map: MapChain, paths: u64, seed: u64) -> Self {
        OmConfig {
            kappa,
            eps_grid,
            eps_domain: 1.0,
            map,
            paths,
            seed,
            t_first: 1e-4,
            t_last: 1e4,
            steps: 240,
            allowance_curves: 6,
            allowance_loops: 20_000,
            lens_resolution: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmPoint {
    pub eps: f64,
    /// Stay probabilities for the diameter and for its image.
    pub p_base: f64,
    pub p_image: f64,
    /// `log[Q(O_eps(gamma)) / Q(O_eps(gamma_0))]`.
    pub log_ratio: f64,
    /// Paired (delta-method) standard error of `log_ratio`.
    pub stderr: f64,
    pub gap: f64,
    /// `|c/2| max |dB(eta) - dB(gamma_0)|` over sampled stayers `eta`.
    pub allowance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmReport {
    pub kappa: f64,
    /// `(c/2)(H(gamma) - H(gamma_0))`.
    pub potential_term: f64,
    /// `-F_kappa`: displayed coefficients times `log|f'|` at the marked points.
    pub boundary_term: f64,
    pub target: f64,
    pub log_kernel_ratio: f64,
    pub points: Vec<OmPoint>,
    pub failures: u64,
    /// Least-squares slope of the gap against `eps`.
    pub gap_slope: f64,
    pub gap_decreasing: bool,
    pub allowance_decreasing: bool,
    pub final_pass: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Default)]
struct Counts {
    n: u64,
    base: Vec<u64>,
    image: Vec<u64>,
    both: Vec<u64>,
    failures: u64,
}

impl Counts {
    fn new(k: usize) -> Self {
        Counts {
            base: vec![0; k],
            image: vec![0; k],
            both: vec![0; k],
            ..Default::default()
        }
    }
}

impl Mergeable for Counts {
    fn merge_from(&mut self, o: &Self) {
        self.n += o.n;
        self.failures += o.failures;
        for k in 0..self.base.len() {
            self.base[k] += o.base[k];
            self.image[k] += o.image[k];
            self.both[k] += o.both[k];
        }
    }
}

/// Nested regions, widest first, with an alive flag per region.
struct Nest<'a> {
    regions: &'a [Region],
    to_disk: &'a MapChain,
    alive: Vec<bool>,
    prev: Option<C64>,
}

impl<'a> Nest<'a> {
    fn new(regions: &'a [Region], to_disk: &'a MapChain) -> Self {
        Nest {
            regions,
            to_disk,
            alive: vec![true; regions.len()],
            prev: None,
        }
    }

    fn any(&self) -> bool {
        self.alive.iter().any(|&a| a)
    }

    /// Feeds the next trace vertex (in `H`).
    fn push(&mut self, w: C64) -> Result<()> {
        let z = self.to_disk.eval(w)?;
        for (k, r) in self.regions.iter().enumerate() {
            if !self.alive[k] {
                continue;
            }
            let inside = r.contains(z) && self.prev.is_none_or(|p| !r.interior_boundary().crosses(p, z));
            if !inside {
                // Regions are nested: the narrower ones are lost as well.
                for a in &mut self.alive[k..] {
                    *a = false;
                }
                break;
            }
        }
        self.prev = Some(z);
        Ok(())
    }
}

/// Traces `d` vertex by vertex, stopping once every region is left. The
/// first vertex (on the boundary) is skipped.
fn trace_into(d: &DrivingFunction, nests: &mut [Nest<'_>], keep: Option<&mut Vec<C64>>) -> Result<()> {
    let mut slits: Vec<(f64, TiltedSlit)> = Vec::with_capacity(d.steps());
    let mut keep = keep;
    for (k, (dt, dw)) in d.increments().enumerate() {
        let base = d.values[k];
        let s = TiltedSlit::from_increment(dw, dt);
        let mut z = C64::new(base, 0.0) + s.tip();
        for &(b, ref t) in slits.iter().rev() {
            z = C64::new(b, 0.0) + t.forward(z - b)?;
        }
        slits.push((base, s));
        for n in nests.iter_mut() {
            n.push(z)?;
        }
        if let Some(v) = keep.as_deref_mut() {
            v.push(z);
        }
        if keep.is_none() && !nests.iter().any(|n| n.any()) {
            break;
        }
    }
    Ok(())
}

fn disk_end(z: C64) -> ExtPoint {
    ExtPoint::Finite(z / z.norm())
}

pub fn om_ratio_experiment(cfg: &OmConfig) -> Result<OmReport> {
    if cfg.eps_grid.is_empty() || cfg.eps_grid.iter().any(|&e| !(e > 0.0 && e < cfg.eps_domain)) {
        return Err(Error::invalid("lens angles must lie in (0, eps_domain)"));
    }
    if cfg.eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("lens angles must decrease"));
    }
    let f = &cfg.map;
    let domain = Region::chordal_lens(cfg.eps_domain, cfg.lens_resolution)?;
    conformality_check(f, &domain, super::CONFORMALITY_SAMPLES)?;
    let (x0, y0) = (C64::new(-1.0, 0.0), C64::new(1.0, 0.0));
    let (x, y) = (f.eval(x0)?, f.eval(y0)?);
    if (x.norm() - 1.0).abs() > 1e-9 || (y.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("map must keep the marked points on the circle"));
    }
    let base_regions = cfg
        .eps_grid
        .iter()
        .map(|&e| Region::chordal_lens(e, cfg.lens_resolution))
        .collect::<Result<Vec<_>>>()?;
    let image_regions = base_regions.iter().map(|r| r.image(f)).collect::<Result<Vec<_>>>()?;
    for r in &image_regions {
        for &m in &[x, y] {
            if !r.contains(m * (1.0 - 1e-6)) {
                return Err(Error::invalid("image neighbourhoods must agree with the disk at the marked points"));
            }
        }
    }

    // Target.
    let cfg0 = Configuration::chordal(Chart::D, ExtPoint::Finite(x0), ExtPoint::Finite(y0), cfg.kappa);
    let cfg1 = Configuration::chordal(Chart::D, disk_end(x), disk_end(y), cfg.kappa);
    let g0 = ray_chord(core::f64::consts::FRAC_PI_2, 1e-4, 600)?;
    let mut g1 = g0.map(f, Chart::D)?;
    let last = g1.points.len() - 1;
    g1.points[0] = x / x.norm();
    g1.points[last] = y / y.norm();
    let trunc = Truncation::default();
    let h0 = chordal_potential(&g0, &cfg0, &trunc)?.total;
    let h1 = chordal_potential(&g1, &cfg1, &trunc)?.total;
    let cc = c(cfg.kappa);
    let potential_term = 0.5 * cc * (h1 - h0);
    let coef = displayed_coefficients(Case::Chordal, cfg.kappa)[0];
    let boundary_term = coef * (f.derivative(x0)?.norm().ln() + f.derivative(y0)?.norm().ln());
    let target = potential_term + boundary_term;
    let log_kernel_ratio = kernel(&cfg1)?.ln() - kernel(&cfg0)?.ln();

    // Paired stay probabilities.
    let grid = geometric_grid(cfg.t_first, cfg.t_last, 4, cfg.steps);
    let horizon = *grid.last().unwrap();
    let sle = SleConfig::chordal(cfg.kappa, horizon, grid.len() - 1).with_grid(grid);
    let n0 = chord_normalizer(Chart::D, ExtPoint::Finite(x0), ExtPoint::Finite(y0))?.inverse();
    let n1 = chord_normalizer(Chart::D, disk_end(x), disk_end(y))?.inverse();
    let key = path_stream(cfg.seed).child("om");
    let k = cfg.eps_grid.len();
    let counts = fold_indexed(
        cfg.paths,
        || Counts::new(k),
        |i, acc: &mut Counts| {
            acc.n += 1;
            let mut nests = [Nest::new(&base_regions, &n0), Nest::new(&image_regions, &n1)];
            let ok = sample_driving(&sle, &key, i).and_then(|p| trace_into(&p.driving, &mut nests, None));
            if ok.is_err() {
                acc.failures += 1;
                return;
            }
            for e in 0..k {
                let (a, b) = (nests[0].alive[e], nests[1].alive[e]);
                acc.base[e] += a as u64;
                acc.image[e] += b as u64;
                acc.both[e] += (a && b) as u64;
            }
        },
    );

    // Bias allowance from stayers of each lens.
    let loops = LoopParams::new(cfg.allowance_loops, cfg.seed).with_stream("om-allowance");
    let wide = &domain;
    let wide_image = wide.image(f)?;
    let delta = |eta: &CurvePath| -> Result<f64> {
        let mut fe = eta.map(f, Chart::D)?;
        fe.marked = Default::default();
        Ok(paired_loop_difference(core::slice::from_ref(eta), wide, &[fe], &wide_image, &loops)?.mean)
    };
    let d_ref = delta(&g0)?;
    let mut stayers: Vec<Vec<CurvePath>> = vec![Vec::new(); k];
    let mut i = 0u64;
    while stayers.iter().any(|s| s.len() < cfg.allowance_curves) && i < cfg.paths {
        let p = sample_driving(&sle, &key, i);
        i += 1;
        let mut pts = Vec::new();
        let mut nests = [Nest::new(&base_regions, &n0)];
        if p.and_then(|p| trace_into(&p.driving, &mut nests, Some(&mut pts))).is_err() {
            continue;
        }
        let curve = n0_curve(&pts, &n0, x0)?;
        for e in 0..k {
            if nests[0].alive[e] && stayers[e].len() < cfg.allowance_curves {
                stayers[e].push(curve.clone());
            }
        }
    }
    let mut allowances = Vec::with_capacity(k);
    for s in &stayers {
        let mut worst: f64 = 0.0;
        for eta in s {
            worst = worst.max((delta(eta)? - d_ref).abs());
        }
        allowances.push(0.5 * cc.abs() * worst);
    }

    let n = counts.n.max(1) as f64;
    let mut points = Vec::with_capacity(k);
    for e in 0..k {
        let p0 = counts.base[e] as f64 / n;
        let p1 = counts.image[e] as f64 / n;
        let p01 = counts.both[e] as f64 / n;
        let log_ratio = log_kernel_ratio + (p1 / p0).ln();
        let var = ((1.0 - p1) / p1 + (1.0 - p0) / p0 - 2.0 * (p01 - p0 * p1) / (p0 * p1)) / n;
        let stderr = var.max(0.0).sqrt();
        let gap = (log_ratio - target).abs();
        points.push(OmPoint {
            eps: cfg.eps_grid[e],
            p_base: p0,
            p_image: p1,
            log_ratio,
            stderr,
            gap,
            allowance: allowances[e],
            pass: gap <= 3.0 * stderr + allowances[e],
        });
    }
    let gap_slope = slope(&points.iter().map(|p| (p.eps, p.gap)).collect::<Vec<_>>());
    let gap_decreasing = points.windows(2).all(|w| w[1].gap < w[0].gap);
    let allowance_decreasing = points.windows(2).all(|w| w[1].allowance <= w[0].allowance);
    let final_pass = points.last().map(|p| p.pass && p.gap.is_finite()).unwrap_or(false);
    Ok(OmReport {
        kappa: cfg.kappa,
        potential_term,
        boundary_term,
        target,
        log_kernel_ratio,
        points,
        failures: counts.failures,
        gap_slope,
        gap_decreasing,
        allowance_decreasing,
        final_pass,
        pass: gap_decreasing && final_pass,
    })
}

fn n0_curve(pts: &[C64], to_disk: &MapChain, start: C64) -> Result<CurvePath> {
    let mut v = Vec::with_capacity(pts.len() + 1);
    v.push(start);
    for &w in pts {
        v.push(to_disk.eval(w)?);
    }
    Ok(CurvePath::new(Chart::D, v))
}

fn slope(xy: &[(f64, f64)]) -> f64 {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_map_has_zero_ratio() {
        let mut cfg = OmConfig::new(2.0, vec![0.8, 0.6], MapChain::identity(), 400, 3);
        cfg.steps = 80;
        cfg.allowance_curves = 1;
        cfg.allowance_loops = 200;
        let r = om_ratio_experiment(&cfg).unwrap();
        assert_eq!(r.target, 0.0);
        for p in &r.points {
            assert_eq!(p.log_ratio, 0.0);
            assert_eq!(p.p_base, p.p_image);
            assert_eq!(p.allowance, 0.0);
        }
    }

    #[test]
    fn rejects_increasing_grid() {
        let cfg = OmConfig::new(2.0, vec![0.4, 0.6], MapChain::identity(), 10, 3);
        assert!(om_ratio_experiment(&cfg).is_err());
    }
}
