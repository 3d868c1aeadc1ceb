//! Polylines, charts and marked points.

use alloc::vec::Vec;

use crate::{Error, Result, C64};

use super::index::SegmentGrid;
use super::map::MapChain;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Chart {
    /// Upper half-plane.
    H,
    /// Unit disk.
    D,
}

impl Chart {
    pub fn contains(&self, z: C64) -> bool {
        match self {
            Chart::H => z.im > 0.0,
            Chart::D => z.norm_sqr() < 1.0,
        }
    }

    pub fn contains_closed(&self, z: C64, tol: f64) -> bool {
        match self {
            Chart::H => z.im >= -tol,
            Chart::D => z.norm() <= 1.0 + tol,
        }
    }

    pub fn boundary_distance(&self, z: C64) -> f64 {
        match self {
            Chart::H => z.im,
            Chart::D => 1.0 - z.norm(),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Chart::H => "H",
            Chart::D => "D",
        }
    }
}

/// A point of the Riemann sphere; infinity only occurs as a marked point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtPoint {
    Finite(C64),
    Infinity,
}

impl ExtPoint {
    pub fn finite(&self) -> Option<C64> {
        match self {
            ExtPoint::Finite(z) => Some(*z),
            ExtPoint::Infinity => None,
        }
    }
}

impl From<C64> for ExtPoint {
    fn from(z: C64) -> Self {
        ExtPoint::Finite(z)
    }
}

/// Endpoints and interior target of a curve.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Marked {
    pub start: Option<ExtPoint>,
    pub end: Option<ExtPoint>,
    pub target: Option<C64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePath {
    pub chart: Chart,
    pub points: Vec<C64>,
    /// Capacity time of each vertex, when known.
    pub times: Option<Vec<f64>>,
    pub marked: Marked,
}

impl CurvePath {
    pub fn new(chart: Chart, points: Vec<C64>) -> Self {
        let marked = Marked {
            start: points.first().map(|&z| ExtPoint::Finite(z)),
            end: points.last().map(|&z| ExtPoint::Finite(z)),
            target: None,
        };
        CurvePath {
            chart,
            points,
            times: None,
            marked,
        }
    }

    pub fn with_marked(mut self, marked: Marked) -> Self {
        self.marked = marked;
        self
    }

    pub fn with_times(mut self, times: Vec<f64>) -> Self {
        self.times = Some(times);
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start(&self) -> C64 {
        self.points[0]
    }

    pub fn tip(&self) -> C64 {
        *self.points.last().expect("empty curve")
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Image under `f`, vertex by vertex. Marked points are mapped too.
    pub fn map(&self, f: &MapChain, chart: Chart) -> Result<CurvePath> {
        let points = self.points.iter().map(|&z| f.eval(z)).collect::<Result<Vec<_>>>()?;
        let mp = |p: Option<ExtPoint>| -> Result<Option<ExtPoint>> {
            match p {
                Some(ExtPoint::Finite(z)) => Ok(Some(ExtPoint::Finite(f.eval(z)?))),
                other => Ok(other),
            }
        };
        Ok(CurvePath {
            chart,
            points,
            times: None,
            marked: Marked {
                start: mp(self.marked.start)?,
                end: mp(self.marked.end)?,
                target: match self.marked.target {
                    Some(z) => Some(f.eval(z)?),
                    None => None,
                },
            },
        })
    }

    pub fn distance_to(&self, z: C64) -> f64 {
        if self.points.len() == 1 {
            return (self.points[0] - z).norm();
        }
        self.points
            .windows(2)
            .map(|w| point_segment_distance(z, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Rejects polylines whose non-adjacent segments intersect.
    pub fn check_simple(&self) -> Result<()> {
        let n = self.points.len();
        if n < 3 {
            return Ok(());
        }
        let grid = SegmentGrid::from_polyline(&self.points);
        for k in 0..n - 1 {
            let (a, b) = (self.points[k], self.points[k + 1]);
            if let Some(j) = grid.first_crossing(a, b, |j| j + 1 < k || j > k + 1) {
                return Err(Error::SelfIntersecting {
                    vertex: k.min(j) + 1,
                });
            }
        }
        Ok(())
    }

    /// Resample to at most `max_points` vertices by keeping every k-th.
    pub fn thinned(&self, max_points: usize) -> CurvePath {
        let n = self.points.len();
        if n <= max_points || max_points < 2 {
            return self.clone();
        }
        let step = (n - 1).div_ceil(max_points - 1);
        let mut idx: Vec<usize> = (0..n).step_by(step).collect();
        if *idx.last().unwrap() != n - 1 {
            idx.push(n - 1);
        }
        CurvePath {
            chart: self.chart,
            points: idx.iter().map(|&i| self.points[i]).collect(),
            times: self.times.as_ref().map(|t| idx.iter().map(|&i| t[i]).collect()),
            marked: self.marked,
        }
    }
}

pub fn point_segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a).re * ab.re + (z - a).im * ab.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

#[inline]
fn orient(a: C64, b: C64, c: C64) -> f64 {
    (b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re)
}

/// Proper or touching intersection of closed segments `[a, b]` and `[c, d]`.
pub fn segments_intersect(a: C64, b: C64, c: C64, d: C64) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: C64, q: C64, r: C64| {
        r.re >= p.re.min(q.re) && r.re <= p.re.max(q.re) && r.im >= p.im.min(q.im) && r.im <= p.im.max(q.im)
    };
    (d1 == 0.0 && on(c, d, a)) || (d2 == 0.0 && on(c, d, b)) || (d3 == 0.0 && on(a, b, c)) || (d4 == 0.0 && on(a, b, d))
}

/// Segment distance; zero when they intersect.
pub fn segment_segment_distance(a: C64, b: C64, c: C64, d: C64) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Marked configuration `(D; x_1..x_n, y)` with link pattern and parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    pub chart: Chart,
    pub boundary: Vec<ExtPoint>,
    pub interior: Option<C64>,
    pub links: Vec<(usize, usize)>,
    pub kappa: f64,
    pub rho: Option<f64>,
    pub mu: Option<f64>,
    pub n: Option<usize>,
}

impl Configuration {
    pub fn chordal(chart: Chart, x: ExtPoint, y: ExtPoint, kappa: f64) -> Self {
        Configuration {
            chart,
            boundary: alloc::vec![x, y],
            interior: None,
            links: alloc::vec![(0, 1)],
            kappa,
            rho: None,
            mu: None,
            n: None,
        }
    }

    pub fn radial(x: C64, kappa: f64) -> Self {
        Configuration {
            chart: Chart::D,
            boundary: alloc::vec![ExtPoint::Finite(x)],
            interior: Some(C64::new(0.0, 0.0)),
            links: Vec::new(),
            kappa,
            rho: None,
            mu: None,
            n: Some(1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_polyline_is_rejected() {
        let pts = alloc::vec![
            C64::new(0.0, 0.0),
            C64::new(0.0, 2.0),
            C64::new(1.0, 1.0),
            C64::new(-1.0, 1.0),
        ];
        let c = CurvePath::new(Chart::H, pts);
        assert!(matches!(c.check_simple(), Err(Error::SelfIntersecting { .. })));
        let ok = CurvePath::new(Chart::H, (0..50).map(|k| C64::new(0.1 * k as f64, 0.05 * (k * k) as f64)).collect());
        assert!(ok.check_simple().is_ok());
    }

    #[test]
    fn distances() {
        let d = point_segment_distance(C64::new(0.5, 1.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        assert!((d - 1.0).abs() < 1e-15);
        let s = segment_segment_distance(
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(2.0, 1.0),
            C64::new(2.0, -1.0),
        );
        assert!((s - 1.0).abs() < 1e-15);
    }
}
