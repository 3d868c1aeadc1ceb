//! Hyperbolic geodesics of the unit disk.

use alloc::vec::Vec;

use super::curve::{Chart, CurvePath, ExtPoint, Marked};
use crate::{Error, Result, C64};
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

/// Polyline approximation of the geodesic from the boundary point `p` to
/// `q`, which is either a boundary point or an interior point.
pub fn hyperbolic_geodesic(p: C64, q: C64, resolution: usize) -> Result<CurvePath> {
    if resolution < 2 {
        return Err(Error::invalid("geodesic resolution must be at least 2"));
    }
    if (p - q).norm() < 1e-14 {
        return Err(Error::invalid("geodesic endpoints coincide"));
    }
    if (p.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("geodesic must start on the unit circle"));
    }
    let p = p / p.norm();
    let n = resolution;
    let mut pts = Vec::with_capacity(n);
    let on_circle = (q.norm() - 1.0).abs() < 1e-9;
    if on_circle {
        let q = q / q.norm();
        let s = p + q;
        if s.norm() < 1e-12 {
            for k in 0..n {
                let t = k as f64 / (n - 1) as f64;
                pts.push(p * (1.0 - t) + q * t);
            }
        } else {
            let c = s * (2.0 / s.norm_sqr());
            let r = (c.norm_sqr() - 1.0).sqrt();
            let a0 = (p - c).im.atan2((p - c).re);
            let mut a1 = (q - c).im.atan2((q - c).re);
            let two_pi = 2.0 * core::f64::consts::PI;
            while a1 - a0 > core::f64::consts::PI {
                a1 -= two_pi;
            }
            while a1 - a0 < -core::f64::consts::PI {
                a1 += two_pi;
            }
            for k in 0..n {
                let t = k as f64 / (n - 1) as f64;
                pts.push(c + C64::from_polar(r, a0 + (a1 - a0) * t));
            }
            pts[0] = p;
            pts[n - 1] = q;
        }
    } else if q.norm() < 1.0 {
        // Segment from T(p) to 0 pulled back by T(z) = (z - q) / (1 - conj(q) z).
        let tp = (p - q) / (C64::new(1.0, 0.0) - q.conj() * p);
        for k in 0..n {
            let s = 1.0 - k as f64 / (n - 1) as f64;
            let w = tp * s;
            pts.push((w + q) / (C64::new(1.0, 0.0) + q.conj() * w));
        }
        pts[0] = p;
        pts[n - 1] = q;
    } else {
        return Err(Error::invalid("geodesic endpoint outside the closed disk"));
    }
    let marked = Marked {
        start: Some(ExtPoint::Finite(p)),
        end: if on_circle { Some(ExtPoint::Finite(q)) } else { None },
        target: if on_circle { None } else { Some(q) },
    };
    Ok(CurvePath::new(Chart::D, pts).with_marked(marked))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn diameters_and_radii() {
        let g = hyperbolic_geodesic(c(-1.0, 0.0), c(1.0, 0.0), 11).unwrap();
        assert!(g.points.iter().all(|z| z.im.abs() < 1e-15));
        let g = hyperbolic_geodesic(c(0.0, 1.0), c(0.0, -1.0), 11).unwrap();
        assert!(g.points.iter().all(|z| z.re.abs() < 1e-15));
        let g = hyperbolic_geodesic(c(1.0, 0.0), c(0.0, 0.0), 11).unwrap();
        assert!(g.points.iter().all(|z| z.im.abs() < 1e-15 && z.re >= 0.0 && z.re <= 1.0));
        assert!(hyperbolic_geodesic(c(1.0, 0.0), c(1.0, 0.0), 5).is_err());
    }

    #[test]
    fn boundary_geodesics_are_orthogonal_to_the_circle() {
        let two_pi = 2.0 * core::f64::consts::PI;
        for k in 0..20 {
            let p = C64::from_polar(1.0, 0.3 * k as f64);
            let q = C64::from_polar(1.0, 0.3 * k as f64 + 0.2 + two_pi * 0.04 * k as f64);
            let g = hyperbolic_geodesic(p, q, 20001).unwrap();
            let n = g.points.len();
            let ends = [
                (g.points[0], g.points[1], g.points[2]),
                (g.points[n - 1], g.points[n - 2], g.points[n - 3]),
            ];
            for (end, p1, p2) in ends {
                let tangent = p1 * 4.0 - end * 3.0 - p2;
                let cross = (tangent.re * end.im - tangent.im * end.re) / tangent.norm();
                assert!(cross.abs().asin() < 1e-6);
            }
            for z in &g.points {
                assert!(z.norm() <= 1.0 + 1e-12);
            }
        }
    }
}
