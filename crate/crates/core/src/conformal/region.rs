//! Regions bounded by polylines and boundary arcs, with membership tests.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use super::curve::{Chart, CurvePath, ExtPoint};
use super::geodesic::hyperbolic_geodesic;
use super::index::{half_open_cross, SegmentGrid};
use super::map::MapChain;
use crate::{Error, Result, C64};
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryArc {
    pub points: Vec<C64>,
    /// Part of the boundary of the ambient domain rather than a cut inside it.
    pub on_domain_boundary: bool,
}

#[derive(Clone, Debug, PartialEq)]
struct PolygonIndex {
    all: SegmentGrid,
    origin: C64,
    h: f64,
    nx: usize,
    ny: usize,
    center_inside: Vec<bool>,
    cell_segs: Vec<Vec<u32>>,
}

impl PolygonIndex {
    fn build(ring: &[C64]) -> Self {
        let mut segs = Vec::with_capacity(ring.len());
        for k in 0..ring.len() {
            segs.push((ring[k], ring[(k + 1) % ring.len()]));
        }
        let all = SegmentGrid::from_segments(segs);
        let bbox = all.bbox;
        let w = (bbox[1] - bbox[0]).max(1e-12);
        let hh = (bbox[3] - bbox[2]).max(1e-12);
        let n = ring.len() as f64;
        let h = (w * hh / (4.0 * n)).sqrt().max(w.max(hh) / 512.0);
        let nx = ((w / h).ceil() as usize).clamp(1, 512);
        let ny = ((hh / h).ceil() as usize).clamp(1, 512);
        let origin = C64::new(bbox[0], bbox[2]);
        let mut cell_segs = vec![Vec::new(); nx * ny];
        for (k, &(a, b)) in all.segs.iter().enumerate() {
            let i0 = (((a.re.min(b.re) - origin.re) / h).floor().max(0.0) as usize).min(nx - 1);
            let i1 = (((a.re.max(b.re) - origin.re) / h).floor().max(0.0) as usize).min(nx - 1);
            let j0 = (((a.im.min(b.im) - origin.im) / h).floor().max(0.0) as usize).min(ny - 1);
            let j1 = (((a.im.max(b.im) - origin.im) / h).floor().max(0.0) as usize).min(ny - 1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    cell_segs[j * nx + i].push(k as u32);
                }
            }
        }
        let mut center_inside = vec![false; nx * ny];
        let mut xs = Vec::new();
        for j in 0..ny {
            let y = origin.im + (j as f64 + 0.5) * h;
            xs.clear();
            for &(u, v) in &all.segs {
                if (u.im > y) != (v.im > y) {
                    let t = (y - u.im) / (v.im - u.im);
                    xs.push(u.re + t * (v.re - u.re));
                }
            }
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut idx = 0;
            for i in 0..nx {
                let x = origin.re + (i as f64 + 0.5) * h;
                while idx < xs.len() && xs[idx] < x {
                    idx += 1;
                }
                center_inside[j * nx + i] = idx % 2 == 1;
            }
        }
        PolygonIndex {
            all,
            origin,
            h,
            nx,
            ny,
            center_inside,
            cell_segs,
        }
    }

    fn contains(&self, z: C64) -> bool {
        let b = self.all.bbox;
        if !(z.re >= b[0] && z.re <= b[1] && z.im >= b[2] && z.im <= b[3]) {
            return false;
        }
        let i = (((z.re - self.origin.re) / self.h) as usize).min(self.nx - 1);
        let j = (((z.im - self.origin.im) / self.h) as usize).min(self.ny - 1);
        let cell = j * self.nx + i;
        let mut inside = self.center_inside[cell];
        let segs = &self.cell_segs[cell];
        if segs.is_empty() {
            return inside;
        }
        let c = C64::new(
            self.origin.re + (i as f64 + 0.5) * self.h,
            self.origin.im + (j as f64 + 0.5) * self.h,
        );
        for &k in segs {
            let (u, v) = self.all.segs[k as usize];
            if half_open_cross(c, z, u, v) {
                inside = !inside;
            }
        }
        inside
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    Domain,
    Polygon(PolygonIndex),
    Tube { center: SegmentGrid, radius: f64 },
    Mapped { base: Box<Region>, forward: MapChain },
}

/// A simply connected subregion of the canonical domain of `chart`.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub chart: Chart,
    pub arcs: Vec<BoundaryArc>,
    shape: Shape,
    interior: SegmentGrid,
}

impl Region {
    /// The whole canonical domain.
    pub fn domain(chart: Chart) -> Self {
        let arcs = match chart {
            Chart::H => Vec::new(),
            Chart::D => vec![BoundaryArc {
                points: (0..=512)
                    .map(|k| C64::from_polar(1.0, 2.0 * core::f64::consts::PI * k as f64 / 512.0))
                    .collect(),
                on_domain_boundary: true,
            }],
        };
        Region {
            chart,
            arcs,
            shape: Shape::Domain,
            interior: SegmentGrid::from_segments(Vec::new()),
        }
    }

    /// Region enclosed by arcs listed counterclockwise; each arc starts where
    /// the previous one ends.
    pub fn polygon(chart: Chart, arcs: Vec<BoundaryArc>) -> Result<Self> {
        if arcs.is_empty() {
            return Err(Error::invalid("region needs at least one boundary arc"));
        }
        let mut ring: Vec<C64> = Vec::new();
        for (k, a) in arcs.iter().enumerate() {
            if a.points.len() < 2 {
                return Err(Error::invalid("boundary arc needs two points"));
            }
            let next = &arcs[(k + 1) % arcs.len()];
            let gap = (a.points[a.points.len() - 1] - next.points[0]).norm();
            if gap > 1e-6 {
                return Err(Error::invalid("boundary arcs do not close up"));
            }
            ring.extend_from_slice(&a.points[..a.points.len() - 1]);
        }
        let area: f64 = (0..ring.len())
            .map(|k| {
                let (p, q) = (ring[k], ring[(k + 1) % ring.len()]);
                p.re * q.im - q.re * p.im
            })
            .sum::<f64>()
            * 0.5;
        if area <= 0.0 {
            return Err(Error::invalid("boundary must be counterclockwise"));
        }
        let interior = SegmentGrid::from_polylines(
            arcs.iter().filter(|a| !a.on_domain_boundary).map(|a| a.points.as_slice()),
        );
        Ok(Region {
            chart,
            arcs,
            shape: Shape::Polygon(PolygonIndex::build(&ring)),
            interior,
        })
    }

    /// Points of the canonical domain within `radius` of `center`.
    pub fn tube(center: &CurvePath, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid("tube radius must be positive"));
        }
        Ok(Region {
            chart: center.chart,
            arcs: Vec::new(),
            shape: Shape::Tube {
                center: SegmentGrid::from_polyline(&center.points),
                radius,
            },
            interior: SegmentGrid::from_segments(Vec::new()),
        })
    }

    pub fn is_polygon(&self) -> bool {
        matches!(self.shape, Shape::Polygon(_))
    }

    pub fn is_domain(&self) -> bool {
        matches!(self.shape, Shape::Domain)
    }

    /// Segments of the boundary lying inside the ambient domain.
    pub fn interior_boundary(&self) -> &SegmentGrid {
        &self.interior
    }

    /// All boundary segments of a polygonal region.
    pub fn boundary_segments(&self) -> Option<&SegmentGrid> {
        match &self.shape {
            Shape::Polygon(p) => Some(&p.all),
            _ => None,
        }
    }

    pub fn contains(&self, z: C64) -> bool {
        if !self.chart.contains(z) {
            return false;
        }
        match &self.shape {
            Shape::Domain => true,
            Shape::Polygon(p) => p.contains(z),
            Shape::Tube { center, radius } => center.distance(z, *radius) < *radius,
            Shape::Mapped { base, forward } => match forward.eval_inverse(z) {
                Ok(w) => base.contains(w) && forward.eval(w).map(|b| (b - z).norm() < 1e-9).unwrap_or(false),
                Err(_) => false,
            },
        }
    }

    /// Distance from an interior point to the part of the boundary inside the
    /// ambient domain, or at least `cap` when it is farther than that.
    pub fn exit_distance(&self, z: C64, cap: f64) -> f64 {
        match &self.shape {
            Shape::Domain => f64::INFINITY,
            Shape::Polygon(_) => self.interior.distance(z, cap),
            Shape::Tube { center, radius } => (radius - center.distance(z, *radius)).max(0.0),
            Shape::Mapped { base, forward } => match forward.eval_inverse(z) {
                Ok(w) => {
                    let d = base.exit_distance(w, cap);
                    let s = forward.derivative(w).map(|d| d.norm()).unwrap_or(1.0);
                    d * s
                }
                Err(_) => 0.0,
            },
        }
    }

    /// Image under a conformal map. Polygons map their boundary vertices;
    /// other shapes keep the map and test membership by preimage.
    pub fn image(&self, f: &MapChain) -> Result<Region> {
        match &self.shape {
            Shape::Polygon(_) => {
                let arcs = self
                    .arcs
                    .iter()
                    .map(|a| {
                        Ok(BoundaryArc {
                            points: a.points.iter().map(|&z| f.eval(z)).collect::<Result<Vec<_>>>()?,
                            on_domain_boundary: a.on_domain_boundary,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Region::polygon(self.chart, arcs)
            }
            _ => Ok(Region {
                chart: self.chart,
                arcs: Vec::new(),
                shape: Shape::Mapped {
                    base: Box::new(self.clone()),
                    forward: f.clone(),
                },
                interior: SegmentGrid::from_segments(Vec::new()),
            }),
        }
    }

    /// Geodesic lens around the diameter of `(D; -1, 1)`: bounded by the
    /// geodesics joining `e^{i eps}` to `e^{i(pi - eps)}` and its conjugate.
    pub fn chordal_lens(eps: f64, resolution: usize) -> Result<Self> {
        if !(eps > 0.0 && eps < core::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid("lens angle must lie in (0, pi/2)"));
        }
        let pi = core::f64::consts::PI;
        let arc = |a0: f64, a1: f64| -> Vec<C64> {
            let m = (resolution / 4).max(8);
            (0..=m).map(|k| C64::from_polar(1.0, a0 + (a1 - a0) * k as f64 / m as f64)).collect()
        };
        let upper = hyperbolic_geodesic(C64::from_polar(1.0, eps), C64::from_polar(1.0, pi - eps), resolution)?;
        let lower = hyperbolic_geodesic(C64::from_polar(1.0, pi + eps), C64::from_polar(1.0, -eps), resolution)?;
        Region::polygon(
            Chart::D,
            vec![
                BoundaryArc {
                    points: arc(-eps, eps),
                    on_domain_boundary: true,
                },
                BoundaryArc {
                    points: upper.points,
                    on_domain_boundary: false,
                },
                BoundaryArc {
                    points: arc(pi - eps, pi + eps),
                    on_domain_boundary: true,
                },
                BoundaryArc {
                    points: lower.points,
                    on_domain_boundary: false,
                },
            ],
        )
    }

    /// Neighbourhood of the radius `[0, 1]`: the half-strip `Re z > 0,
    /// |Im z| < eps` together with the disk `|z| < eps`.
    pub fn radial_keyhole(eps: f64, resolution: usize) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::invalid("keyhole width must lie in (0, 1/2)"));
        }
        let pi = core::f64::consts::PI;
        let delta = eps.asin();
        let x = delta.cos();
        let m = resolution.max(8);
        let line = |a: C64, b: C64| -> Vec<C64> { (0..=m).map(|k| a + (b - a) * (k as f64 / m as f64)).collect() };
        let circle_arc: Vec<C64> = (0..=m / 4 + 4)
            .map(|k| C64::from_polar(1.0, -delta + 2.0 * delta * k as f64 / (m / 4 + 4) as f64))
            .collect();
        let small: Vec<C64> = (0..=m)
            .map(|k| C64::from_polar(eps, pi / 2.0 + pi * k as f64 / m as f64))
            .collect();
        Region::polygon(
            Chart::D,
            vec![
                BoundaryArc {
                    points: circle_arc,
                    on_domain_boundary: true,
                },
                BoundaryArc {
                    points: line(C64::new(x, eps), C64::new(0.0, eps)),
                    on_domain_boundary: false,
                },
                BoundaryArc {
                    points: small,
                    on_domain_boundary: false,
                },
                BoundaryArc {
                    points: line(C64::new(0.0, -eps), C64::new(x, -eps)),
                    on_domain_boundary: false,
                },
            ],
        )
    }

    /// `{|Im z| < eps}` inside the disk: the `eps`-neighbourhood of the diameter.
    pub fn diameter_strip(eps: f64, resolution: usize) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.9) {
            return Err(Error::invalid("strip width must lie in (0, 0.9)"));
        }
        let pi = core::f64::consts::PI;
        let delta = eps.asin();
        let x = delta.cos();
        let m = resolution.max(8);
        let q = m / 4 + 4;
        let arc = |a0: f64, a1: f64| -> Vec<C64> {
            (0..=q).map(|k| C64::from_polar(1.0, a0 + (a1 - a0) * k as f64 / q as f64)).collect()
        };
        let line = |a: C64, b: C64| -> Vec<C64> { (0..=m).map(|k| a + (b - a) * (k as f64 / m as f64)).collect() };
        Region::polygon(
            Chart::D,
            vec![
                BoundaryArc {
                    points: arc(-delta, delta),
                    on_domain_boundary: true,
                },
                BoundaryArc {
                    points: line(C64::new(x, eps), C64::new(-x, eps)),
                    on_domain_boundary: false,
                },
                BoundaryArc {
                    points: arc(pi - delta, pi + delta),
                    on_domain_boundary: true,
                },
                BoundaryArc {
                    points: line(C64::new(-x, -eps), C64::new(x, -eps)),
                    on_domain_boundary: false,
                },
            ],
        )
    }
}

/// Whether every vertex of `curve` lies in `region` at least `clearance`
/// away from its interior boundary, ignoring vertices within `marked_tol` of
/// the curve's marked points.
pub fn region_contains(region: &Region, curve: &CurvePath, clearance: f64, marked_tol: f64) -> Result<bool> {
    if region.chart != curve.chart {
        return Err(Error::ChartMismatch);
    }
    let mut marks: Vec<C64> = Vec::new();
    for p in [curve.marked.start, curve.marked.end].into_iter().flatten() {
        if let ExtPoint::Finite(z) = p {
            marks.push(z);
        }
    }
    if let Some(z) = curve.marked.target {
        marks.push(z);
    }
    for &z in &curve.points {
        if marks.iter().any(|m| (z - *m).norm() < marked_tol) {
            continue;
        }
        if !region.contains(z) {
            return Ok(false);
        }
        if clearance > 0.0 && region.exit_distance(z, clearance) < clearance {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn lens_contains_diameter() {
        let lens = Region::chordal_lens(0.6, 400).unwrap();
        let d = hyperbolic_geodesic(c(-1.0, 0.0), c(1.0, 0.0), 200).unwrap();
        assert!(region_contains(&lens, &d, 0.01, 1e-9).unwrap());
        assert!(lens.contains(c(0.0, 0.2)));
        let top = (0.3f64).tan();
        assert!(!lens.contains(c(0.0, top + 1e-3)));
        assert!(lens.contains(c(0.0, top - 1e-3)));
    }

    #[test]
    fn curve_leaving_disk_is_rejected() {
        let lens = Region::chordal_lens(0.6, 400).unwrap();
        let out = CurvePath::new(Chart::D, vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.2, 0.0), c(1.0, 0.0)]);
        assert!(!region_contains(&lens, &out, 0.0, 1e-9).unwrap());
        let full = Region::domain(Chart::D);
        assert!(!region_contains(&full, &out, 0.0, 1e-9).unwrap());
    }

    #[test]
    fn grazing_curve_below_clearance_is_rejected() {
        let eps: f64 = 0.6;
        let lens = Region::chordal_lens(eps, 2000).unwrap();
        let clearance = 0.02;
        // The upper geodesic's lowest point is i tan(eps/2); place a vertex at
        // distance clearance/2 below it.
        let low = (eps / 2.0).tan();
        let curve = CurvePath::new(
            Chart::D,
            vec![c(-1.0, 0.0), c(-0.3, 0.0), c(0.0, low - clearance / 2.0), c(0.3, 0.0), c(1.0, 0.0)],
        );
        let measured = lens.exit_distance(c(0.0, low - clearance / 2.0), 1.0);
        assert!((measured - clearance / 2.0).abs() < 1e-5);
        assert!(!region_contains(&lens, &curve, clearance, 1e-9).unwrap());
        assert!(region_contains(&lens, &curve, clearance / 4.0, 1e-9).unwrap());
    }

    #[test]
    fn membership_is_stable_under_refinement() {
        let coarse = Region::chordal_lens(0.5, 200).unwrap();
        let fine = Region::chordal_lens(0.5, 3200).unwrap();
        let tol = 1e-3;
        for k in 0..4000 {
            let a = 0.61803398875 * k as f64;
            let z = C64::from_polar((0.37 * k as f64).fract().sqrt(), 2.0 * core::f64::consts::PI * a.fract());
            if fine.exit_distance(z, tol) > tol && (1.0 - z.norm()) > tol {
                assert_eq!(coarse.contains(z), fine.contains(z), "{z}");
            }
        }
    }

    #[test]
    fn chart_mismatch_is_rejected() {
        let lens = Region::chordal_lens(0.5, 100).unwrap();
        let curve = CurvePath::new(Chart::H, vec![c(0.0, 0.0), c(0.0, 1.0)]);
        assert!(matches!(region_contains(&lens, &curve, 0.0, 0.0), Err(Error::ChartMismatch)));
    }

    #[test]
    fn keyhole_and_strip() {
        let k = Region::radial_keyhole(0.2, 400).unwrap();
        assert!(k.contains(c(0.5, 0.1)) && k.contains(c(-0.15, 0.0)) && !k.contains(c(-0.5, 0.0)));
        assert!(!k.contains(c(0.5, 0.25)));
        let s = Region::diameter_strip(0.2, 400).unwrap();
        assert!(s.contains(c(-0.9, 0.1)) && !s.contains(c(0.0, 0.3)));
        let tube = Region::tube(&hyperbolic_geodesic(c(-1.0, 0.0), c(1.0, 0.0), 50).unwrap(), 0.2).unwrap();
        for z in [c(0.3, 0.19), c(0.3, 0.21), c(-0.5, -0.1)] {
            assert_eq!(tube.contains(z), s.contains(z));
        }
    }
}
