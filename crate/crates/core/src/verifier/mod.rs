//! Numerical checks of the conformal deformation identities, the exponent
//! limits and desk-scale Onsager-Machlup ratio experiments.

mod om;
mod uniform;

pub use om::{om_ratio_experiment, OmConfig, OmPoint, OmReport};
pub use uniform::{uniform_convergence_proxy, BracketPoint, UniformConfig, UniformReport};

use alloc::vec;
use alloc::vec::Vec;

use crate::conformal::{region_contains, BoundaryArc, Chart, Configuration, CurvePath, ExtPoint, MapChain, Marked, Primitive, Region};
use crate::energies::constants::{identity_coefficients, limit_ratios};
use crate::energies::{
    chordal_potential, exponents, multiradial_potential_from_curves, normalize_arc, radial_potential, rho_potential,
    Case, MultiRadialOptions, PotentialReport, Slot, Truncation,
};
use crate::loewner::ForcePoint;
use crate::loop_soup::{run, Functional, LoopParams, LoopProblem, LoopQuery, LoopSet};
use crate::{Error, Estimate, Result, C64};
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

/// Number of points the Cauchy-Riemann test samples.
pub const CONFORMALITY_SAMPLES: usize = 200;
pub const DEFAULT_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub enum CaseKind {
    Chordal,
    Rho { rho: f64 },
    Radial,
    MultiRadial(MultiRadialOptions),
}

impl CaseKind {
    pub fn name(&self) -> &'static str {
        match self {
            CaseKind::Chordal => "chordal",
            CaseKind::Rho { .. } => "rho-chordal",
            CaseKind::Radial => "radial",
            CaseKind::MultiRadial(_) => "multi-radial",
        }
    }

    fn case(&self, n: usize) -> Case {
        match self {
            CaseKind::Chordal => Case::Chordal,
            CaseKind::Rho { rho } => Case::ForcedChordal { rho: *rho },
            CaseKind::Radial => Case::Radial,
            CaseKind::MultiRadial(o) => Case::MultiRadial { n, mu: o.mu },
        }
    }
}

/// Coefficients of `log|f'|` at the marked points, one per marked point in
/// configuration order (boundary points, then the interior point).
pub fn deformation_coefficients(kind: &CaseKind, n: usize) -> Vec<f64> {
    let closed = identity_coefficients(kind.case(n));
    match kind {
        CaseKind::Chordal | CaseKind::Rho { .. } => vec![closed[0]; 2],
        CaseKind::Radial => vec![closed[0], closed[1]],
        CaseKind::MultiRadial(_) => {
            let mut c = vec![closed[0]; n];
            c.push(closed[1]);
            c
        }
    }
}

/// Inputs of one deformation identity in the disk chart.
#[derive(Clone, Debug)]
pub struct DeformationCase {
    pub kind: CaseKind,
    /// One chord, or one arc per boundary point ending at 0.
    pub curves: Vec<CurvePath>,
    pub config: Configuration,
    /// The neighbourhood `A` on which `map` is conformal.
    pub region: Region,
    pub map: MapChain,
    pub loops: LoopParams,
    pub trunc: Truncation,
    pub clearance: f64,
    pub tolerance: f64,
}

impl DeformationCase {
    pub fn new(kind: CaseKind, curves: Vec<CurvePath>, config: Configuration, region: Region, map: MapChain) -> Self {
        DeformationCase {
            kind,
            curves,
            config,
            region,
            map,
            loops: LoopParams::default().with_stream("verify"),
            trunc: Truncation::default(),
            clearance: 1e-3,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn with_loops(mut self, loops: LoopParams) -> Self {
        self.loops = loops;
        self
    }

    pub fn with_truncation(mut self, trunc: Truncation) -> Self {
        self.trunc = trunc;
        self
    }

    /// Reference setup of each kind: the geodesic (or straight `SLE_0(rho)`
    /// ray) of `(D; -1, 1)`, the radius to 0 from 1, or `n` radii from
    /// [`multiradial_points`], inside a [`half_disk_region`] of radius
    /// [`reference_radius`].
    pub fn reference(kind: CaseKind, kappa: f64, n: usize, map: MapChain) -> Result<Self> {
        let radius = reference_radius(&kind, n);
        let (curves, config, marked) = match &kind {
            CaseKind::Chordal | CaseKind::Rho { .. } => {
                let theta = match kind {
                    CaseKind::Rho { rho } => rho_ray_angle(rho),
                    _ => core::f64::consts::FRAC_PI_2,
                };
                let (x, y) = (C64::new(-1.0, 0.0), C64::new(1.0, 0.0));
                let mut config = Configuration::chordal(Chart::D, ExtPoint::Finite(x), ExtPoint::Finite(y), kappa);
                if let CaseKind::Rho { rho } = kind {
                    config.rho = Some(rho);
                }
                (vec![ray_chord(theta, 1e-4, 600)?], config, vec![x, y])
            }
            CaseKind::Radial => {
                let x = C64::new(1.0, 0.0);
                (vec![radius_arc(0.0, 1e-3, 600)], Configuration::radial(x, kappa), vec![x])
            }
            CaseKind::MultiRadial(o) => {
                if n < 2 {
                    return Err(Error::invalid("multi-radial reference needs n >= 2"));
                }
                let pts = multiradial_points(n);
                let curves = pts.iter().map(|z| radius_arc(z.arg(), 1e-3, 300)).collect();
                let mut config = Configuration::radial(pts[0], kappa);
                config.boundary = pts.iter().map(|&z| ExtPoint::Finite(z)).collect();
                config.mu = Some(o.mu);
                config.n = Some(n);
                (curves, config, pts)
            }
        };
        let region = half_disk_region(radius, &marked, 512)?;
        Ok(DeformationCase::new(kind, curves, config, region, map))
    }

    fn boundary_points(&self) -> Result<Vec<C64>> {
        self.config
            .boundary
            .iter()
            .map(|p| p.finite().ok_or_else(|| Error::invalid("marked points must be finite in the disk chart")))
            .collect()
    }

    fn marked_points(&self) -> Result<Vec<C64>> {
        let mut m = self.boundary_points()?;
        if let Some(y) = self.config.interior {
            m.push(y);
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    pub case: &'static str,
    pub before: PotentialReport,
    pub after: PotentialReport,
    /// `H(f gamma) - H(gamma)`, deterministic parts.
    pub lhs: f64,
    /// `log|f'|` at the marked points.
    pub log_derivatives: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub derivative_term: f64,
    /// `B(gamma, D \ A; D) - B(f gamma, D \ f(A); D)` on paired loops.
    pub loop_difference: Estimate,
    pub rhs: f64,
    pub discrepancy: f64,
    pub stderr: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Largest Cauchy-Riemann residual found, or an error naming the first
/// sampled point where `f` fails to be conformal or leaves the disk.
pub fn conformality_check(f: &MapChain, region: &Region, samples: usize) -> Result<f64> {
    let pts = sample_points(region, samples);
    if pts.is_empty() {
        return Err(Error::invalid("could not sample points in the region"));
    }
    let mut worst: f64 = 0.0;
    for z in pts {
        let h = 1e-5;
        let fx = (f.eval(z + h)? - f.eval(z - h)?) / (2.0 * h);
        let fy = (f.eval(z + C64::new(0.0, h))? - f.eval(z - C64::new(0.0, h))?) / (2.0 * h);
        let d = f.derivative(z)?;
        let scale = d.norm();
        if !(scale > 1e-12) {
            return Err(Error::invalid(alloc::format!("map is not locally injective at {z}")));
        }
        let cr = (fy - C64::i() * fx).norm() / scale;
        let analytic = (fx - d).norm() / scale;
        worst = worst.max(cr).max(analytic);
        if cr > 1e-6 || analytic > 1e-6 {
            return Err(Error::invalid(alloc::format!("map fails the Cauchy-Riemann test at {z}")));
        }
        if !Chart::D.contains(f.eval(z)?) {
            return Err(Error::invalid(alloc::format!("map sends {z} outside the disk")));
        }
    }
    Ok(worst)
}

/// Halton points of the region's bounding box that fall inside it.
fn sample_points(region: &Region, samples: usize) -> Vec<C64> {
    let mut b = [-1.0f64, 1.0, -1.0, 1.0];
    if !region.is_domain() && !region.arcs.is_empty() {
        b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for p in region.arcs.iter().flat_map(|a| a.points.iter()) {
            b = [b[0].min(p.re), b[1].max(p.re), b[2].min(p.im), b[3].max(p.im)];
        }
    }
    let halton = |mut i: u64, base: u64| {
        let (mut f, mut r) = (1.0, 0.0);
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    };
    let mut out = Vec::with_capacity(samples);
    for i in 1..(samples as u64 * 500) {
        let z = C64::new(b[0] + (b[1] - b[0]) * halton(i, 2), b[2] + (b[3] - b[2]) * halton(i, 3));
        if region.contains(z) {
            out.push(z);
            if out.len() == samples {
                break;
            }
        }
    }
    out
}

fn check_case(case: &DeformationCase) -> Result<()> {
    let n = case.curves.len();
    let nb = case.config.boundary.len();
    let shape_ok = match case.kind {
        CaseKind::Chordal | CaseKind::Rho { .. } => n == 1 && nb == 2,
        CaseKind::Radial => n == 1 && nb == 1,
        CaseKind::MultiRadial(_) => n >= 1 && nb == n,
    };
    if !shape_ok || case.config.chart != Chart::D || case.region.chart != Chart::D {
        return Err(Error::invalid("curves and marked points do not match the case kind"));
    }
    if let CaseKind::Rho { rho } = case.kind {
        if !(rho > -2.0) {
            return Err(Error::invalid("rho must exceed -2"));
        }
    }
    let radial = matches!(case.kind, CaseKind::Radial | CaseKind::MultiRadial(_));
    if radial && case.config.interior != Some(C64::new(0.0, 0.0)) {
        return Err(Error::invalid("radial cases target the origin"));
    }
    for c in &case.curves {
        if c.chart != Chart::D || !region_contains(&case.region, c, case.clearance, 1e-6)? {
            return Err(Error::invalid("curves must lie in the region with clearance"));
        }
    }
    conformality_check(&case.map, &case.region, CONFORMALITY_SAMPLES)?;
    // A and f(A) must agree with the disk near every marked point.
    for x in case.boundary_points()? {
        if !on_domain_arc(&case.region, x, case.clearance) {
            return Err(Error::invalid("region must agree with the disk near the marked points"));
        }
        let fx = case.map.eval(x)?;
        if (fx.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("map must send marked boundary points to the circle"));
        }
    }
    for a in case.region.arcs.iter().filter(|a| a.on_domain_boundary) {
        for &z in &a.points {
            if (case.map.eval(z)?.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::invalid("map must preserve the circle where the region meets it"));
            }
        }
    }
    if let Some(y) = case.config.interior {
        if case.map.eval(y)?.norm() > 1e-12 {
            return Err(Error::invalid("map must fix the interior marked point"));
        }
        if !case.region.contains(y) || case.region.exit_distance(y, 1.0) < case.clearance {
            return Err(Error::invalid("region must contain a neighbourhood of the interior point"));
        }
    }
    Ok(())
}

/// Whether `x` lies on a boundary arc of the region along the circle, at
/// least `clearance` from the arc's ends.
fn on_domain_arc(region: &Region, x: C64, clearance: f64) -> bool {
    if region.is_domain() {
        return true;
    }
    region.arcs.iter().filter(|a| a.on_domain_boundary).any(|a| {
        let near = a.points.windows(2).any(|w| crate::conformal::curve::point_segment_distance(x, w[0], w[1]) < 1e-9);
        let (s, e) = (a.points[0], a.points[a.points.len() - 1]);
        near && (x - s).norm() > clearance && (x - e).norm() > clearance
    })
}

fn potential(kind: &CaseKind, curves: &[CurvePath], config: &Configuration, trunc: &Truncation) -> Result<PotentialReport> {
    match kind {
        CaseKind::Chordal => chordal_potential(&curves[0], config, trunc),
        CaseKind::Rho { rho } => {
            let mut cfg = config.clone();
            cfg.rho = Some(*rho);
            rho_potential(&curves[0], &cfg, ForcePoint::Start, trunc)
        }
        CaseKind::Radial => radial_potential(&curves[0], config, trunc),
        CaseKind::MultiRadial(opts) => {
            let cut = curves
                .iter()
                .map(|c| Ok(normalize_arc(c, C64::new(0.0, 0.0), trunc.r_min)?.0))
                .collect::<Result<Vec<_>>>()?;
            multiradial_potential_from_curves(&cut, opts)
        }
    }
}

fn map_config(config: &Configuration, f: &MapChain) -> Result<Configuration> {
    let mut out = config.clone();
    for p in out.boundary.iter_mut() {
        if let ExtPoint::Finite(z) = *p {
            let w = f.eval(z)?;
            // Back onto the circle exactly.
            *p = ExtPoint::Finite(w / w.norm());
        }
    }
    if let Some(y) = out.interior {
        out.interior = Some(f.eval(y)?);
    }
    Ok(out)
}

/// Curves as loop sets, with vertices on the circle pulled just inside.
fn loop_curves(curves: &[CurvePath]) -> Result<LoopSet> {
    let inner: Vec<CurvePath> = curves
        .iter()
        .map(|c| {
            let pts = c
                .points
                .iter()
                .map(|&z| if z.norm() > 1.0 - 1e-9 { z / z.norm() * (1.0 - 1e-9) } else { z })
                .collect();
            CurvePath::new(c.chart, pts)
        })
        .collect();
    LoopSet::curves(&inner)
}

/// `B(gamma, D \ A; D) - B(f gamma, D \ f(A); D)` on one loop sample.
pub fn paired_loop_difference(
    before: &[CurvePath],
    region: &Region,
    after: &[CurvePath],
    image: &Region,
    loops: &LoopParams,
) -> Result<Estimate> {
    let (g0, out0) = (loop_curves(before)?, LoopSet::outside(region)?);
    let (g1, out1) = (loop_curves(after)?, LoopSet::outside(image)?);
    let disk = Region::domain(Chart::D);
    let query = |a, b| LoopQuery {
        domains: vec![0],
        functional: Functional::AllHit(vec![a, b]),
    };
    let problem = LoopProblem {
        domains: vec![&disk],
        sets: vec![&g0, &out0, &g1, &out1],
        queries: vec![query(0, 1), query(2, 3)],
    };
    Ok(run(&problem, loops)?.combination(&[1.0, -1.0]))
}

fn verify(case: &DeformationCase) -> Result<IdentityReport> {
    check_case(case)?;
    let f = &case.map;
    let after_curves = case
        .curves
        .iter()
        .map(|c| {
            let mut m = c.map(f, Chart::D)?;
            // Endpoints on the circle stay on it.
            let last = m.points.len() - 1;
            for k in [0, last] {
                let z = m.points[k];
                if z.norm() > 1.0 - 1e-12 {
                    m.points[k] = z / z.norm();
                }
            }
            m.marked = Marked {
                start: m.points.first().map(|z| ExtPoint::Finite(*z)),
                end: m.marked.end,
                target: m.marked.target,
            };
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let after_config = map_config(&case.config, f)?;
    let image = case.region.image(f)?;

    let before = potential(&case.kind, &case.curves, &case.config, &case.trunc)?;
    let after = potential(&case.kind, &after_curves, &after_config, &case.trunc)?;
    let lhs = after.deterministic() - before.deterministic();

    let logs = case
        .marked_points()?
        .into_iter()
        .map(|z| Ok(f.derivative(z)?.norm().ln()))
        .collect::<Result<Vec<f64>>>()?;
    let coefficients = deformation_coefficients(&case.kind, case.curves.len());
    let derivative_term: f64 = coefficients.iter().zip(&logs).map(|(c, l)| c * l).sum();
    let loop_difference = paired_loop_difference(&case.curves, &case.region, &after_curves, &image, &case.loops)?;
    let rhs = derivative_term + loop_difference.mean;
    let discrepancy = lhs - rhs;
    let stderr = loop_difference.stderr;
    Ok(IdentityReport {
        case: case.kind.name(),
        before,
        after,
        lhs,
        log_derivatives: logs,
        coefficients,
        derivative_term,
        loop_difference,
        rhs,
        discrepancy,
        stderr,
        tolerance: case.tolerance,
        pass: discrepancy.abs() <= 3.0 * stderr + case.tolerance,
    })
}

fn expect_kind(case: &DeformationCase, ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(alloc::format!("wrong case kind {}", case.kind.name())))
    }
}

pub fn verify_chordal_deformation(case: &DeformationCase) -> Result<IdentityReport> {
    expect_kind(case, matches!(case.kind, CaseKind::Chordal))?;
    verify(case)
}

pub fn verify_rho_deformation(case: &DeformationCase) -> Result<IdentityReport> {
    expect_kind(case, matches!(case.kind, CaseKind::Rho { .. }))?;
    verify(case)
}

pub fn verify_radial_deformation(case: &DeformationCase) -> Result<IdentityReport> {
    expect_kind(case, matches!(case.kind, CaseKind::Radial))?;
    verify(case)
}

pub fn verify_multiradial_deformation(case: &DeformationCase) -> Result<IdentityReport> {
    expect_kind(case, matches!(case.kind, CaseKind::MultiRadial(_)))?;
    verify(case)
}

/// Any case kind.
pub fn verify_deformation(case: &DeformationCase) -> Result<IdentityReport> {
    verify(case)
}

/// One exponent-limit comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentCheck {
    pub case: Case,
    /// Index of the weight family (boundary first).
    pub family: usize,
    /// Number of marked points sharing the family.
    pub count: usize,
    pub kappa: f64,
    /// `-2 b_kappa(j) / c(kappa)` at `kappa`.
    pub numeric: f64,
    /// Deformation-identity coefficient of one point of the family.
    pub closed_form: f64,
    pub error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentReport {
    pub checks: Vec<ExponentCheck>,
    pub pass: bool,
}

pub const EXPONENT_KAPPA: f64 = 1e-8;

/// `e(j) = lim -2 b_kappa(j) / c(kappa)` against the deformation identities.
pub fn verify_exponent_limits() -> ExponentReport {
    let cases = [
        Case::Chordal,
        Case::ForcedChordal { rho: 0.0 },
        Case::ForcedChordal { rho: 1.0 },
        Case::ForcedChordal { rho: -1.5 },
        Case::MultiChordal { n: 2 },
        Case::Radial,
        Case::ForcedRadial { rho: 0.7 },
        Case::MultiRadial { n: 1, mu: 0.0 },
        Case::MultiRadial { n: 2, mu: 0.0 },
        Case::MultiRadial { n: 3, mu: 0.5 },
    ];
    let mut checks = Vec::new();
    for case in cases {
        let numeric = limit_ratios(EXPONENT_KAPPA, case);
        let closed = identity_coefficients(case);
        let table = exponents(EXPONENT_KAPPA, case).expect("valid exponent case");
        for (k, (num, lem)) in numeric.iter().zip(&closed).enumerate() {
            let count = match table.exponents[k].slot {
                Slot::Boundary { count } => count,
                Slot::Interior => 1,
            };
            let error = (num - lem).abs();
            checks.push(ExponentCheck {
                case,
                family: k,
                count,
                kappa: EXPONENT_KAPPA,
                numeric: *num,
                closed_form: *lem,
                error,
                pass: error <= 1e-6,
            });
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    ExponentReport { checks, pass }
}

/// `M(z) = (z + i) / (1 + i z)`: the disk onto `H` with `+-1` fixed and
/// `0 -> i`.
fn disk_chart() -> Primitive {
    let one = C64::new(1.0, 0.0);
    let i = C64::i();
    Primitive::mobius(one, i, i, one)
}

/// `M^-1 . p . M` for a real polynomial `p` (coefficients from degree 0).
/// It preserves the circle wherever it is conformal.
pub fn polynomial_deformation(coeffs: &[f64]) -> MapChain {
    let m = disk_chart();
    MapChain::new(vec![
        m.clone(),
        Primitive::Polynomial {
            coeffs: coeffs.iter().map(|&c| C64::new(c, 0.0)).collect(),
        },
        m.inverse(),
    ])
}

/// `p(w) = w + delta (w^2 - 1)`: fixes both ends of the diameter.
pub fn chordal_perturbation(delta: f64) -> MapChain {
    polynomial_deformation(&[-delta, 1.0, delta])
}

/// `p(w) = w + delta (w^2 + 1)(a + b w)`: fixes the origin.
pub fn radial_perturbation(delta: f64, a: f64, b: f64) -> MapChain {
    polynomial_deformation(&[delta * a, 1.0 + delta * b, delta * a, delta * b])
}

/// `n` points of the circle, evenly spaced with `i` halfway between two of
/// them (`+-1` for `n = 2`).
pub fn multiradial_points(n: usize) -> Vec<C64> {
    let step = 2.0 * core::f64::consts::PI / n as f64;
    let mut pts: Vec<C64> = (0..n)
        .map(|j| C64::from_polar(1.0, core::f64::consts::FRAC_PI_2 + 0.5 * step + step * j as f64))
        .collect();
    for z in &mut pts {
        // Snap rounding noise so that marked points match polygon vertices.
        if z.im.abs() < 1e-15 {
            *z = C64::new(z.re.signum(), 0.0);
        }
    }
    pts.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
    pts
}

/// Half-disk radius used by [`DeformationCase::reference`]: 4.5 for chords,
/// 9 for radial cases, grown so that every marked point fits.
pub fn reference_radius(kind: &CaseKind, n: usize) -> f64 {
    match kind {
        CaseKind::Chordal | CaseKind::Rho { .. } => 4.5,
        CaseKind::Radial => 9.0,
        CaseKind::MultiRadial(_) => {
            let m = Primitive::mobius(C64::new(1.0, 0.0), C64::i(), C64::i(), C64::new(1.0, 0.0));
            let far = multiradial_points(n.max(2))
                .iter()
                .map(|&z| m.eval(z).map(|w| w.norm()).unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max);
            9.0f64.max(2.0 * far)
        }
    }
}

/// Default perturbation for [`DeformationCase::reference`], conformal on
/// the reference region.
pub fn reference_map(kind: &CaseKind, n: usize) -> MapChain {
    match kind {
        CaseKind::Chordal | CaseKind::Rho { .. } => chordal_perturbation(0.1),
        _ => radial_perturbation(0.1f64.min(0.9 / reference_radius(kind, n)), 0.5, 0.0),
    }
}

/// `{z in D : |M(z)| < radius}`, the pullback of a half-disk of `H`. The
/// circle arc gets a vertex at every point of `marked`.
pub fn half_disk_region(radius: f64, marked: &[C64], resolution: usize) -> Result<Region> {
    if !(radius > 1.0) {
        return Err(Error::invalid("half-disk radius must exceed 1"));
    }
    let back = disk_chart().inverse();
    let two_pi = 2.0 * core::f64::consts::PI;
    let lo = back.eval(C64::new(-radius, 0.0))?.arg();
    let mut hi = back.eval(C64::new(radius, 0.0))?.arg();
    while hi <= lo {
        hi += two_pi;
    }
    let m = resolution.max(16);
    let mut angles: Vec<f64> = (0..=m).map(|k| lo + (hi - lo) * k as f64 / m as f64).collect();
    for z in marked {
        let mut a = z.arg();
        while a <= lo {
            a += two_pi;
        }
        if a < hi {
            angles.push(a);
        }
    }
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let circle: Vec<C64> = angles.iter().map(|&a| C64::from_polar(1.0, a)).collect();
    let mut cap = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let w = C64::from_polar(radius, core::f64::consts::PI * k as f64 / m as f64);
        cap.push(back.eval(w)?);
    }
    let (first, last) = (circle[0], circle[circle.len() - 1]);
    cap[0] = last;
    cap[m] = first;
    Region::polygon(
        Chart::D,
        vec![
            BoundaryArc {
                points: circle,
                on_domain_boundary: true,
            },
            BoundaryArc {
                points: cap,
                on_domain_boundary: false,
            },
        ],
    )
}

fn geometric(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let r = (hi / lo).ln() / n as f64;
    (0..=n).map(move |k| lo * (r * k as f64).exp())
}

/// Chord of `(D; -1, 1)` whose normalized image in `(H; 0, inf)` is the ray
/// at angle `theta`, with vertices spaced geometrically on `[r0, 1/r0]`.
pub fn ray_chord(theta: f64, r0: f64, n: usize) -> Result<CurvePath> {
    let to_d = |w: C64| (w - C64::i()) / (w + C64::i());
    let mut pts = vec![C64::new(-1.0, 0.0)];
    for r in geometric(r0, 1.0 / r0, n) {
        pts.push(to_d(C64::from_polar(r, theta)));
    }
    pts.push(C64::new(1.0, 0.0));
    let c = CurvePath::new(Chart::D, pts).with_marked(Marked {
        start: Some(ExtPoint::Finite(C64::new(-1.0, 0.0))),
        end: Some(ExtPoint::Finite(C64::new(1.0, 0.0))),
        target: None,
    });
    c.check_simple()?;
    Ok(c)
}

/// Angle of the straight `SLE_0(rho)` ray with force point at `0+`.
pub fn rho_ray_angle(rho: f64) -> f64 {
    let a = 2.0 / (rho + 4.0);
    core::f64::consts::PI * (1.0 - a)
}

/// Radius from `e^{i theta}` to `r_min / 2`, refined at both ends.
pub fn radius_arc(theta: f64, r_min: f64, n: usize) -> CurvePath {
    let u = C64::from_polar(1.0, theta);
    let mut pts = vec![u];
    for s in geometric(1e-5, 0.5, n / 2) {
        pts.push(u * (1.0 - s));
    }
    for r in geometric(0.5 * r_min, 0.5, n / 2).collect::<Vec<_>>().into_iter().rev().skip(1) {
        pts.push(u * r);
    }
    CurvePath::new(Chart::D, pts).with_marked(Marked {
        start: Some(ExtPoint::Finite(u)),
        end: None,
        target: Some(C64::new(0.0, 0.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chordal_case(kind: CaseKind, theta: f64, f: MapChain, samples: u64) -> DeformationCase {
        let g = ray_chord(theta, 1e-4, 400).unwrap();
        let cfg = Configuration::chordal(
            Chart::D,
            ExtPoint::Finite(C64::new(-1.0, 0.0)),
            ExtPoint::Finite(C64::new(1.0, 0.0)),
            2.0,
        );
        DeformationCase::new(kind, vec![g], cfg, Region::chordal_lens(1.0, 256).unwrap(), f)
            .with_loops(LoopParams::new(samples, 11).with_stream("verify"))
    }

    #[test]
    fn identity_map_gives_exact_zero() {
        let c = chordal_case(CaseKind::Chordal, core::f64::consts::FRAC_PI_2, MapChain::identity(), 2000);
        let r = verify_chordal_deformation(&c).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.rhs, 0.0);
        assert_eq!(r.discrepancy, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn rho_zero_matches_chordal_structure() {
        let f = chordal_perturbation(0.1);
        let a = verify_chordal_deformation(&chordal_case(CaseKind::Chordal, core::f64::consts::FRAC_PI_2, f.clone(), 500)).unwrap();
        let b = verify_rho_deformation(&chordal_case(CaseKind::Rho { rho: 0.0 }, core::f64::consts::FRAC_PI_2, f, 500)).unwrap();
        assert_eq!(a.coefficients, b.coefficients);
        assert_eq!(a.derivative_term, b.derivative_term);
        assert_eq!(a.loop_difference, b.loop_difference);
        assert!((a.lhs - b.lhs).abs() < 1e-9, "{} {}", a.lhs, b.lhs);
    }

    #[test]
    fn coefficients_match_exponent_limits() {
        let kinds = [
            (CaseKind::Chordal, 1),
            (CaseKind::Rho { rho: 0.8 }, 1),
            (CaseKind::Radial, 1),
            (CaseKind::MultiRadial(MultiRadialOptions::default()), 2),
            (
                CaseKind::MultiRadial(MultiRadialOptions {
                    mu: 0.3,
                    ..Default::default()
                }),
                3,
            ),
        ];
        for (kind, n) in kinds {
            for kappa in [0.5, 2.0, 4.0] {
                let table = exponents(kappa, kind.case(n)).unwrap();
                let mut by_limit = Vec::new();
                for e in &table.exponents {
                    let m = match e.slot {
                        Slot::Boundary { count } => count,
                        Slot::Interior => 1,
                    };
                    by_limit.extend(core::iter::repeat_n(e.deformation, m));
                }
                let used = deformation_coefficients(&kind, n);
                assert_eq!(used.len(), by_limit.len());
                for (u, l) in used.iter().zip(&by_limit) {
                    assert!((u - l).abs() <= 1e-12, "{kind:?} {u} {l}");
                }
            }
        }
    }

    #[test]
    fn exponent_limits_hold() {
        let r = verify_exponent_limits();
        assert!(r.pass, "{:?}", r.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
        let chordal = &r.checks[0];
        assert!((chordal.numeric - 0.25).abs() < 1e-6);
        let radial_interior = r.checks.iter().find(|c| c.case == Case::Radial && c.family == 1).unwrap();
        assert!((radial_interior.numeric + 0.125).abs() < 1e-6);
        let rho = r.checks.iter().find(|c| c.case == Case::ForcedChordal { rho: 1.0 }).unwrap();
        assert!((rho.count as f64 * rho.numeric - 3.0 * 7.0 / 24.0).abs() < 1e-6);
    }

    #[test]
    fn non_conformal_map_is_rejected() {
        // z -> conj-like fold: 0.5 z + 0.6 z^2 has a critical point inside the lens.
        let f = MapChain::single(Primitive::Polynomial {
            coeffs: vec![C64::new(0.0, 0.0), C64::new(0.5, 0.0), C64::new(0.6, 0.0)],
        });
        let c = chordal_case(CaseKind::Chordal, core::f64::consts::FRAC_PI_2, f, 100);
        assert!(verify_chordal_deformation(&c).is_err());
    }

    #[test]
    fn perturbations_preserve_the_circle() {
        for f in [chordal_perturbation(0.1), radial_perturbation(0.1, 0.5, 0.3)] {
            for k in 0..16 {
                let z = C64::from_polar(1.0, -0.7 + 0.1 * k as f64);
                assert!((f.eval(z).unwrap().norm() - 1.0).abs() < 1e-12);
            }
        }
        assert!(radial_perturbation(0.1, 0.5, 0.3).eval(C64::new(0.0, 0.0)).unwrap().norm() < 1e-15);
    }

    #[test]
    fn reference_cases_accept_default_maps() {
        let kinds = [
            (CaseKind::Chordal, 1),
            (CaseKind::Rho { rho: 1.0 }, 1),
            (CaseKind::Radial, 1),
            (CaseKind::MultiRadial(MultiRadialOptions::default()), 2),
            (CaseKind::MultiRadial(MultiRadialOptions::default()), 3),
        ];
        for (kind, n) in kinds {
            let f = reference_map(&kind, n);
            let c = DeformationCase::reference(kind.clone(), 2.0, n, f.clone()).unwrap();
            conformality_check(&f, &c.region, CONFORMALITY_SAMPLES).unwrap();
        }
        assert_eq!(multiradial_points(2), vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]);
    }
}
