//! Uniform-grid index over line segments.

use alloc::vec;
use alloc::vec::Vec;

use super::curve::{point_segment_distance, segments_intersect};
use crate::C64;
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentGrid {
    pub segs: Vec<(C64, C64)>,
    origin: C64,
    h: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
    pub bbox: [f64; 4],
}

impl SegmentGrid {
    pub fn from_polyline(points: &[C64]) -> Self {
        Self::from_polylines(core::iter::once(points))
    }

    pub fn from_polylines<'a>(lines: impl IntoIterator<Item = &'a [C64]>) -> Self {
        let mut segs = Vec::new();
        for l in lines {
            if l.len() == 1 {
                segs.push((l[0], l[0]));
            }
            for w in l.windows(2) {
                segs.push((w[0], w[1]));
            }
        }
        Self::from_segments(segs)
    }

    pub fn from_segments(segs: Vec<(C64, C64)>) -> Self {
        let mut bbox = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        let mut total = 0.0;
        for &(a, b) in &segs {
            for p in [a, b] {
                bbox[0] = bbox[0].min(p.re);
                bbox[1] = bbox[1].max(p.re);
                bbox[2] = bbox[2].min(p.im);
                bbox[3] = bbox[3].max(p.im);
            }
            total += (b - a).norm();
        }
        if segs.is_empty() {
            return SegmentGrid {
                segs,
                origin: C64::new(0.0, 0.0),
                h: 1.0,
                nx: 0,
                ny: 0,
                cells: Vec::new(),
                bbox,
            };
        }
        let w = (bbox[1] - bbox[0]).max(1e-12);
        let hgt = (bbox[3] - bbox[2]).max(1e-12);
        let n = segs.len() as f64;
        let mut h = (total / n).max((w * hgt / (2.0 * n)).sqrt()).max(w.max(hgt) / 1024.0);
        if !(h > 0.0) {
            h = 1.0;
        }
        let nx = ((w / h).ceil() as usize).clamp(1, 1024);
        let ny = ((hgt / h).ceil() as usize).clamp(1, 1024);
        let origin = C64::new(bbox[0], bbox[2]);
        let mut cells = vec![Vec::new(); nx * ny];
        for (k, &(a, b)) in segs.iter().enumerate() {
            let (i0, j0) = Self::cell_of(origin, h, nx, ny, C64::new(a.re.min(b.re), a.im.min(b.im)));
            let (i1, j1) = Self::cell_of(origin, h, nx, ny, C64::new(a.re.max(b.re), a.im.max(b.im)));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    cells[j * nx + i].push(k as u32);
                }
            }
        }
        SegmentGrid {
            segs,
            origin,
            h,
            nx,
            ny,
            cells,
            bbox,
        }
    }

    #[inline]
    fn cell_of(origin: C64, h: f64, nx: usize, ny: usize, z: C64) -> (usize, usize) {
        let fx = ((z.re - origin.re) / h).floor();
        let fy = ((z.im - origin.im) / h).floor();
        let i = if fx < 0.0 { 0 } else { (fx as usize).min(nx - 1) };
        let j = if fy < 0.0 { 0 } else { (fy as usize).min(ny - 1) };
        (i, j)
    }

    pub fn is_empty(&self) -> bool {
        self.segs.is_empty()
    }

    /// Distance from `z` to the bounding box (0 inside).
    pub fn bbox_distance(&self, z: C64) -> f64 {
        let dx = (self.bbox[0] - z.re).max(z.re - self.bbox[1]).max(0.0);
        let dy = (self.bbox[2] - z.im).max(z.im - self.bbox[3]).max(0.0);
        dx.hypot(dy)
    }

    /// Exact distance to the nearest segment when it is below `cap`;
    /// otherwise some value `>= cap`.
    pub fn distance(&self, z: C64, cap: f64) -> f64 {
        if self.segs.is_empty() {
            return f64::INFINITY;
        }
        let bd = self.bbox_distance(z);
        if bd >= cap {
            return bd;
        }
        let (ci, cj) = Self::cell_of(self.origin, self.h, self.nx, self.ny, z);
        let mut best = f64::INFINITY;
        let max_ring = self.nx.max(self.ny);
        for r in 0..=max_ring {
            let ring_bound = if r == 0 { 0.0 } else { (r - 1) as f64 * self.h };
            if best <= ring_bound || ring_bound >= cap {
                break;
            }
            let i_lo = ci as isize - r as isize;
            let i_hi = ci as isize + r as isize;
            let j_lo = cj as isize - r as isize;
            let j_hi = cj as isize + r as isize;
            for j in j_lo..=j_hi {
                if j < 0 || j >= self.ny as isize {
                    continue;
                }
                let edge_row = j == j_lo || j == j_hi;
                let mut i = i_lo;
                while i <= i_hi {
                    if i >= 0 && i < self.nx as isize {
                        for &k in &self.cells[j as usize * self.nx + i as usize] {
                            let (a, b) = self.segs[k as usize];
                            let d = point_segment_distance(z, a, b);
                            if d < best {
                                best = d;
                            }
                        }
                    }
                    if edge_row || i == i_hi {
                        i += 1;
                    } else {
                        i = i_hi;
                    }
                }
            }
        }
        best
    }

    fn for_cells_on_segment(&self, a: C64, b: C64, mut f: impl FnMut(usize) -> bool) -> bool {
        let lo = C64::new(a.re.min(b.re), a.im.min(b.im));
        let hi = C64::new(a.re.max(b.re), a.im.max(b.im));
        if hi.re < self.bbox[0] || lo.re > self.bbox[1] || hi.im < self.bbox[2] || lo.im > self.bbox[3] {
            return false;
        }
        let (i0, j0) = Self::cell_of(self.origin, self.h, self.nx, self.ny, lo);
        let (i1, j1) = Self::cell_of(self.origin, self.h, self.nx, self.ny, hi);
        for j in j0..=j1 {
            for i in i0..=i1 {
                if f(j * self.nx + i) {
                    return true;
                }
            }
        }
        false
    }

    /// Whether `[a, b]` meets any indexed segment.
    pub fn crosses(&self, a: C64, b: C64) -> bool {
        self.first_crossing(a, b, |_| true).is_some()
    }

    /// Index of some indexed segment accepted by `keep` that meets `[a, b]`.
    pub fn first_crossing(&self, a: C64, b: C64, keep: impl Fn(usize) -> bool) -> Option<usize> {
        if self.segs.is_empty() {
            return None;
        }
        let mut found = None;
        self.for_cells_on_segment(a, b, |cell| {
            for &k in &self.cells[cell] {
                let k = k as usize;
                if !keep(k) {
                    continue;
                }
                let (c, d) = self.segs[k];
                if segments_intersect(a, b, c, d) {
                    found = Some(k);
                    return true;
                }
            }
            false
        });
        found
    }

    /// Parity of crossings of `[a, b]` with the indexed segments, using a
    /// half-open rule at vertices.
    pub fn crossing_parity(&self, a: C64, b: C64) -> bool {
        let mut odd = false;
        let mut seen: Vec<u32> = Vec::new();
        self.for_cells_on_segment(a, b, |cell| {
            for &k in &self.cells[cell] {
                if seen.contains(&k) {
                    continue;
                }
                seen.push(k);
                let (u, v) = self.segs[k as usize];
                if half_open_cross(a, b, u, v) {
                    odd = !odd;
                }
            }
            false
        });
        odd
    }
}

#[inline]
fn orient(a: C64, b: C64, c: C64) -> f64 {
    (b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re)
}

#[inline]
pub(crate) fn half_open_cross(a: C64, b: C64, u: C64, v: C64) -> bool {
    ((orient(a, b, u) > 0.0) != (orient(a, b, v) > 0.0)) && ((orient(u, v, a) > 0.0) != (orient(u, v, b) > 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn grid_distance_matches_brute_force(pts in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2..60), qx in -3.0..3.0f64, qy in -3.0..3.0f64) {
            let pts: Vec<C64> = pts.into_iter().map(|(x, y)| C64::new(x, y)).collect();
            let g = SegmentGrid::from_polyline(&pts);
            let q = C64::new(qx, qy);
            let brute = pts.windows(2).map(|w| point_segment_distance(q, w[0], w[1])).fold(f64::INFINITY, f64::min);
            let d = g.distance(q, f64::INFINITY);
            prop_assert!((d - brute).abs() < 1e-12);
            let capped = g.distance(q, 0.1);
            if brute < 0.1 { prop_assert!((capped - brute).abs() < 1e-12); } else { prop_assert!(capped >= 0.1 - 1e-12); }
        }

        #[test]
        fn grid_crossing_matches_brute_force(pts in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2..40), a in (-1.5..1.5f64, -1.5..1.5f64), b in (-1.5..1.5f64, -1.5..1.5f64)) {
            let pts: Vec<C64> = pts.into_iter().map(|(x, y)| C64::new(x, y)).collect();
            let g = SegmentGrid::from_polyline(&pts);
            let a = C64::new(a.0, a.1);
            let b = C64::new(b.0, b.1);
            let brute = pts.windows(2).any(|w| segments_intersect(a, b, w[0], w[1]));
            prop_assert_eq!(g.crosses(a, b), brute);
            let parity = pts.windows(2).filter(|w| half_open_cross(a, b, w[0], w[1])).count() % 2 == 1;
            prop_assert_eq!(g.crossing_parity(a, b), parity);
        }
    }
}
