//! Loewner potentials assembled from energies, kernels and loop terms.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::kernel::poisson_kernel;
use super::quadrature::{chordal_energy, forced_energy, radial_energy};
use crate::conformal::{Chart, Configuration, CurvePath, ExtPoint, MapChain, Marked, Primitive};
use crate::conformal::{Region, SegmentGrid};
use crate::loewner::{extract_driving, extract_radial, DrivingFunction, ForcePoint};
use crate::loop_soup::{multi_cross_mass, LoopParams};
use crate::{Error, Estimate, Result, C64};
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub name: String,
    pub value: f64,
    /// Zero for deterministic terms.
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialReport {
    pub terms: Vec<Term>,
    pub total: f64,
    pub stderr: f64,
    /// Raw Loewner energy `I` (before the 1/12).
    pub energy: f64,
    /// Capacity horizon the energy was computed on.
    pub horizon: f64,
    /// Set when the curve was cut short of its target point.
    pub truncated: bool,
}

impl PotentialReport {
    pub fn new(energy: f64, horizon: f64, truncated: bool) -> Self {
        PotentialReport {
            terms: Vec::new(),
            total: 0.0,
            stderr: 0.0,
            energy,
            horizon,
            truncated,
        }
    }

    pub fn push(&mut self, name: &str, value: f64) {
        self.total += value;
        self.terms.push(Term {
            name: name.into(),
            value,
            stderr: 0.0,
        });
    }

    pub fn push_estimate(&mut self, name: &str, e: &Estimate) {
        self.total += e.mean;
        self.stderr = (self.stderr * self.stderr + e.stderr * e.stderr).sqrt();
        self.terms.push(Term {
            name: name.into(),
            value: e.mean,
            stderr: e.stderr,
        });
    }

    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == name)
    }

    /// Deterministic part of the total.
    pub fn deterministic(&self) -> f64 {
        self.terms.iter().filter(|t| t.stderr == 0.0).map(|t| t.value).sum()
    }
}

/// Truncation controls for curves ending at a marked point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    /// Chordal: drop vertices whose normalized image exceeds this modulus.
    pub far: f64,
    /// Radial: drop vertices closer than this to the interior point.
    pub r_min: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { far: 1e6, r_min: 1e-3 }
    }
}

fn map_ext(p: &Primitive, x: ExtPoint) -> Result<ExtPoint> {
    match (p, x) {
        (Primitive::Mobius { a, b, c, d }, ExtPoint::Finite(z)) => {
            let den = c * z + d;
            if den.norm_sqr() == 0.0 {
                Ok(ExtPoint::Infinity)
            } else {
                Ok(ExtPoint::Finite((a * z + b) / den))
            }
        }
        (Primitive::Mobius { a, c, .. }, ExtPoint::Infinity) => {
            if c.norm_sqr() == 0.0 {
                Ok(ExtPoint::Infinity)
            } else {
                Ok(ExtPoint::Finite(a / c))
            }
        }
        _ => Err(Error::invalid("marked points only move under Mobius maps")),
    }
}

fn real_of(p: ExtPoint) -> Option<f64> {
    p.finite().map(|z| z.re)
}

/// Mobius map of the chart onto `H` sending `x` to 0 and `y` to infinity.
pub fn chord_normalizer(chart: Chart, x: ExtPoint, y: ExtPoint) -> Result<MapChain> {
    let mut steps = Vec::new();
    let (mut x, mut y) = (x, y);
    if chart == Chart::D {
        let i = C64::i();
        let one = C64::new(1.0, 0.0);
        // i (1 + z) / (1 - z): -1 -> 0, 1 -> infinity.
        let m = Primitive::mobius(i, i, -one, one);
        x = map_ext(&m, x)?;
        y = map_ext(&m, y)?;
        steps.push(m);
    }
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let psi = match (real_of(x), real_of(y)) {
        (Some(a), None) => Primitive::affine(one, C64::new(-a, 0.0)),
        (None, Some(c)) => Primitive::mobius(zero, -one, one, C64::new(-c, 0.0)),
        (Some(a), Some(c)) if a < c => Primitive::mobius(one, C64::new(-a, 0.0), -one, C64::new(c, 0.0)),
        (Some(a), Some(c)) if a > c => Primitive::mobius(one, C64::new(-a, 0.0), one, C64::new(-c, 0.0)),
        _ => return Err(Error::invalid("coincident marked points")),
    };
    steps.push(psi);
    Ok(MapChain::new(steps))
}

/// The chord pushed to `(H; 0, infinity)`, cut where its image leaves
/// the disk of radius `far`.
pub fn normalize_chord(curve: &CurvePath, x: ExtPoint, y: ExtPoint, far: f64) -> Result<(CurvePath, bool)> {
    let chain = chord_normalizer(curve.chart, x, y)?;
    let mut pts = Vec::with_capacity(curve.len());
    pts.push(C64::new(0.0, 0.0));
    let mut truncated = false;
    for &z in &curve.points[1..] {
        match chain.eval(z) {
            Ok(w) if w.norm() <= far && w.re.is_finite() && w.im.is_finite() => pts.push(w),
            _ => {
                truncated = true;
                break;
            }
        }
    }
    let out = CurvePath::new(Chart::H, pts).with_marked(Marked {
        start: Some(ExtPoint::Finite(C64::new(0.0, 0.0))),
        end: Some(ExtPoint::Infinity),
        target: None,
    });
    Ok((out, truncated))
}

/// The arc pushed to `(D; ., 0)` by the disk automorphism fixing the
/// direction of `x`, cut at radius `r_min`.
pub fn normalize_arc(curve: &CurvePath, y: C64, r_min: f64) -> Result<(CurvePath, bool)> {
    if curve.chart != Chart::D {
        return Err(Error::ChartMismatch);
    }
    let one = C64::new(1.0, 0.0);
    let phi = |z: C64| (z - y) / (one - y.conj() * z);
    let mut pts = Vec::with_capacity(curve.len());
    let mut truncated = false;
    for (k, &z) in curve.points.iter().enumerate() {
        let w = phi(z);
        if k > 0 && w.norm() < r_min {
            truncated = true;
            break;
        }
        pts.push(if k == 0 { w / w.norm() } else { w });
    }
    let out = CurvePath::new(Chart::D, pts).with_marked(Marked {
        start: Some(ExtPoint::Finite(phi(curve.points[0]))),
        end: None,
        target: Some(C64::new(0.0, 0.0)),
    });
    Ok((out, truncated))
}

fn chord_ends(config: &Configuration) -> Result<(ExtPoint, ExtPoint)> {
    if config.boundary.len() != 2 || config.interior.is_some() {
        return Err(Error::invalid("chordal potential needs exactly two boundary points"));
    }
    Ok((config.boundary[0], config.boundary[1]))
}

/// Driving function of a chord in `(D; x, y)` seen in `(H; 0, infinity)`.
pub fn chord_driving(curve: &CurvePath, x: ExtPoint, y: ExtPoint, trunc: &Truncation) -> Result<(DrivingFunction, bool)> {
    let (h, truncated) = normalize_chord(curve, x, y, trunc.far)?;
    Ok((extract_driving(&h)?, truncated))
}

/// Radial driving function of an arc in `(D; x, y)`.
pub fn arc_driving(curve: &CurvePath, y: C64, trunc: &Truncation) -> Result<(DrivingFunction, bool)> {
    let (d, truncated) = normalize_arc(curve, y, trunc.r_min)?;
    Ok((extract_radial(&d)?.0, truncated))
}

/// `H = I / 12 - (1/4) log P_{D;x,y}`.
pub fn chordal_potential(curve: &CurvePath, config: &Configuration, trunc: &Truncation) -> Result<PotentialReport> {
    let (x, y) = chord_ends(config)?;
    let (d, truncated) = chord_driving(curve, x, y, trunc)?;
    chordal_potential_from_driving(&d, x, y, truncated)
}

pub fn chordal_potential_from_driving(d: &DrivingFunction, x: ExtPoint, y: ExtPoint, truncated: bool) -> Result<PotentialReport> {
    let i = chordal_energy(d)?;
    let mut r = PotentialReport::new(i, d.horizon(), truncated);
    r.push("energy", i / 12.0);
    r.push("kernel", -0.25 * poisson_kernel(x, y)?.ln());
    Ok(r)
}

/// `H^rho = I^rho / 12 - ((rho + 2)(rho + 6) / 48) log P_{D;x,y}`.
pub fn rho_potential(
    curve: &CurvePath,
    config: &Configuration,
    fp: ForcePoint,
    trunc: &Truncation,
) -> Result<PotentialReport> {
    let (x, y) = chord_ends(config)?;
    let rho = config.rho.ok_or_else(|| Error::invalid("rho potential needs rho"))?;
    let (d, truncated) = chord_driving(curve, x, y, trunc)?;
    rho_potential_from_driving(&d, rho, fp, x, y, truncated)
}

pub fn rho_potential_from_driving(
    d: &DrivingFunction,
    rho: f64,
    fp: ForcePoint,
    x: ExtPoint,
    y: ExtPoint,
    truncated: bool,
) -> Result<PotentialReport> {
    let i = forced_energy(d, rho, fp)?;
    let mut r = PotentialReport::new(i, d.horizon(), truncated);
    r.push("energy", i / 12.0);
    r.push("kernel", -(rho + 2.0) * (rho + 6.0) / 48.0 * poisson_kernel(x, y)?.ln());
    Ok(r)
}

/// `H^R = I^R / 12` (or `I^{R,rho} / 12` when the configuration has rho),
/// reported on the capacity horizon reached before truncation.
pub fn radial_potential(curve: &CurvePath, config: &Configuration, trunc: &Truncation) -> Result<PotentialReport> {
    let y = config
        .interior
        .ok_or_else(|| Error::invalid("radial potential needs an interior point"))?;
    let (d, truncated) = arc_driving(curve, y, trunc)?;
    radial_potential_from_driving(&d, config.rho, truncated)
}

pub fn radial_potential_from_driving(d: &DrivingFunction, rho: Option<f64>, truncated: bool) -> Result<PotentialReport> {
    let i = match rho {
        Some(r) => forced_energy(d, r, ForcePoint::Start)?,
        None => radial_energy(d)?,
    };
    let mut r = PotentialReport::new(i, d.horizon(), truncated);
    r.push("energy", i / 12.0);
    Ok(r)
}

/// `sum_j H(gamma_j) + B(gamma_1..gamma_n; D)`, with chord `j` joining the
/// marked points of link `j`. The loop term is a Monte Carlo estimate.
pub fn multichordal_potential(
    curves: &[CurvePath],
    config: &Configuration,
    trunc: &Truncation,
    loops: &LoopParams,
) -> Result<PotentialReport> {
    if curves.len() != config.links.len() || curves.is_empty() {
        return Err(Error::invalid("one chord per link is required"));
    }
    for a in 0..curves.len() {
        let grid = SegmentGrid::from_polyline(&curves[a].points);
        for b in a + 1..curves.len() {
            if curves[b].points.windows(2).any(|w| grid.crosses(w[0], w[1])) {
                return Err(Error::NotDisjoint);
            }
        }
    }
    let mut parts = Vec::with_capacity(curves.len());
    for (c, &(i, j)) in curves.iter().zip(&config.links) {
        let (x, y) = match (config.boundary.get(i), config.boundary.get(j)) {
            (Some(x), Some(y)) => (*x, *y),
            _ => return Err(Error::invalid("link refers to a missing marked point")),
        };
        let (d, truncated) = chord_driving(c, x, y, trunc)?;
        parts.push(chordal_potential_from_driving(&d, x, y, truncated)?);
    }
    let energy = parts.iter().map(|p| p.energy).sum();
    let horizon = parts.iter().map(|p| p.horizon).fold(0.0, f64::max);
    let mut r = PotentialReport::new(energy, horizon, parts.iter().any(|p| p.truncated));
    for (k, p) in parts.iter().enumerate() {
        for t in &p.terms {
            r.push(&format!("{}[{k}]", t.name), t.value);
        }
    }
    // Loop masses are computed in the disk chart; half-plane chords are mapped there.
    let mass = multi_cross_mass(curves, &Region::domain(Chart::D), loops)?;
    r.push_estimate("loop_term", &mass);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::hyperbolic_geodesic;
    use crate::loewner::{chordal_trace, DrivingKind, TraceOptions};

    fn fin(re: f64, im: f64) -> ExtPoint {
        ExtPoint::Finite(C64::new(re, im))
    }

    #[test]
    fn kernel_term_in_half_plane() {
        let d = DrivingFunction::zero(DrivingKind::Chordal, 1.0, 4);
        let r = chordal_potential_from_driving(&d, fin(0.0, 0.0), fin(2.0, 0.0), false).unwrap();
        assert!((r.term("kernel").unwrap().value - 4f64.ln() / 4.0).abs() < 1e-15);
        assert_eq!(r.total, r.term("kernel").unwrap().value);
    }

    #[test]
    fn disk_geodesic_has_zero_energy() {
        let g = hyperbolic_geodesic(C64::new(-1.0, 0.0), C64::new(1.0, 0.0), 200).unwrap();
        let cfg = Configuration::chordal(Chart::D, fin(-1.0, 0.0), fin(1.0, 0.0), 2.0);
        let r = chordal_potential(&g, &cfg, &Truncation::default()).unwrap();
        assert!(r.energy < 1e-20, "{}", r.energy);
        let arc = hyperbolic_geodesic(C64::new(0.0, 1.0), C64::new(-1.0, 0.0), 300).unwrap();
        let cfg = Configuration::chordal(Chart::D, fin(0.0, 1.0), fin(-1.0, 0.0), 2.0);
        let r = chordal_potential(&arc, &cfg, &Truncation::default()).unwrap();
        assert!(r.energy < 1e-3, "{}", r.energy);
    }

    #[test]
    fn scaling_changes_only_kernel_term() {
        let d = DrivingFunction::from_fn(DrivingKind::Chordal, 1.0, 300, |t| 0.6 * (2.0 * t).sin()).unwrap();
        let mut pts = chordal_trace(&d, &TraceOptions::default()).unwrap().curve.points;
        // Close the chord at y = 3 through the upper half-plane.
        let tip = *pts.last().unwrap();
        for k in 1..=200 {
            let s = k as f64 / 200.0;
            let arc = tip + (C64::new(3.0, 0.0) - tip) * s + C64::new(0.0, 0.5 * s * (1.0 - s));
            pts.push(arc);
        }
        let curve = CurvePath::new(Chart::H, pts);
        let cfg = Configuration::chordal(Chart::H, fin(0.0, 0.0), fin(3.0, 0.0), 2.0);
        let r1 = chordal_potential(&curve, &cfg, &Truncation::default()).unwrap();
        let scaled = CurvePath::new(Chart::H, curve.points.iter().map(|z| z * 2.0).collect());
        let cfg2 = Configuration::chordal(Chart::H, fin(0.0, 0.0), fin(6.0, 0.0), 2.0);
        let r2 = chordal_potential(&scaled, &cfg2, &Truncation::default()).unwrap();
        assert!((r2.energy - r1.energy).abs() < 1e-6 * (1.0 + r1.energy));
        let expected = 0.25 * (4.0f64).ln();
        assert!((r2.total - r1.total - expected).abs() < 1e-6);
    }

    fn half_chord(x: f64, y: f64) -> CurvePath {
        let c = C64::new((x + y) / 2.0, 0.0);
        let r = (y - x).abs() / 2.0;
        let pts = (0..=200)
            .map(|k| c + C64::from_polar(r, core::f64::consts::PI * (1.0 - k as f64 / 200.0)))
            .collect::<Vec<_>>();
        let mut pts = pts;
        pts[0] = C64::new(x, 0.0);
        pts[200] = C64::new(y, 0.0);
        CurvePath::new(Chart::H, pts)
    }

    fn two_link_config(xs: [f64; 4]) -> Configuration {
        let mut cfg = Configuration::chordal(Chart::H, fin(xs[0], 0.0), fin(xs[1], 0.0), 2.0);
        cfg.boundary.extend([fin(xs[2], 0.0), fin(xs[3], 0.0)]);
        cfg.links = alloc::vec![(0, 1), (2, 3)];
        cfg
    }

    #[test]
    fn single_link_matches_chordal() {
        let c = half_chord(-1.0, 1.0);
        let cfg = Configuration::chordal(Chart::H, fin(-1.0, 0.0), fin(1.0, 0.0), 2.0);
        let t = Truncation::default();
        let single = chordal_potential(&c, &cfg, &t).unwrap();
        let multi = multichordal_potential(&[c], &cfg, &t, &LoopParams::new(100, 0)).unwrap();
        assert!((single.total - multi.total).abs() < 1e-12);
        assert_eq!(multi.term("loop_term").unwrap().value, 0.0);
    }

    #[test]
    fn crossing_chords_are_rejected() {
        let cfg = two_link_config([-2.0, 1.0, -1.0, 2.0]);
        let r = multichordal_potential(
            &[half_chord(-2.0, 1.0), half_chord(-1.0, 2.0)],
            &cfg,
            &Truncation::default(),
            &LoopParams::new(100, 0),
        );
        assert!(matches!(r, Err(Error::NotDisjoint)));
    }

    #[test]
    fn nested_chords_have_positive_loop_term() {
        let cfg = two_link_config([-2.0, 2.0, -1.0, 1.0]);
        let r = multichordal_potential(
            &[half_chord(-2.0, 2.0), half_chord(-1.0, 1.0)],
            &cfg,
            &Truncation::default(),
            &LoopParams::new(20_000, 3),
        )
        .unwrap();
        let l = r.term("loop_term").unwrap();
        assert!(l.value > 3.0 * l.stderr, "{l:?}");
        assert!(r.term("energy[1]").is_some() && r.term("kernel[0]").is_some());
    }
}
