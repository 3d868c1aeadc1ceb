//! Chordal Loewner evolution in the upper half-plane.

use alloc::vec::Vec;

use super::driving::{DrivingFunction, DrivingKind};
use super::TraceResult;
use crate::conformal::{Chart, CurvePath, ExtPoint, MapChain, Marked, Primitive, TiltedSlit};
use crate::{Error, Result, C64};
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

/// Distance below which a point counts as swallowed.
pub const SWALLOW_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForwardOptions {
    /// RK4 steps per grid interval before adaptive halving.
    pub substeps: usize,
    /// Maximum number of halvings near the driving point.
    pub max_halvings: u32,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        ForwardOptions {
            substeps: 1,
            max_halvings: 40,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TraceOptions {
    /// Use vertical slits at the new driving value instead of tilted slits.
    pub vertical: bool,
}

/// One RK4 step of `dy/dt = v(y, t)` over `[t0, t0 + h]`, subdividing while
/// `|y[0] - W| < 10 sqrt(h)`.
pub(crate) fn rk4_adaptive<const N: usize, F, W>(
    y: [C64; N],
    t0: f64,
    h: f64,
    v: &F,
    w: &W,
    depth: u32,
    max_depth: u32,
) -> Result<[C64; N]>
where
    F: Fn(&[C64; N], f64) -> Result<[C64; N]>,
    W: Fn(f64) -> C64,
{
    let dist = (y[0] - w(t0)).norm();
    if dist < SWALLOW_TOL {
        return Err(Error::Swallowed { time: t0 });
    }
    if dist < 10.0 * h.sqrt() && depth < max_depth {
        let y1 = rk4_adaptive(y, t0, h / 2.0, v, w, depth + 1, max_depth)?;
        return rk4_adaptive(y1, t0 + h / 2.0, h / 2.0, v, w, depth + 1, max_depth);
    }
    let axpy = |a: &[C64; N], k: &[C64; N], s: f64| {
        let mut out = *a;
        for (o, kk) in out.iter_mut().zip(k) {
            *o += kk * s;
        }
        out
    };
    let k1 = v(&y, t0)?;
    let k2 = v(&axpy(&y, &k1, h / 2.0), t0 + h / 2.0)?;
    let k3 = v(&axpy(&y, &k2, h / 2.0), t0 + h / 2.0)?;
    let k4 = v(&axpy(&y, &k3, h), t0 + h)?;
    let mut out = y;
    for i in 0..N {
        out[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        if !(out[i].re.is_finite() && out[i].im.is_finite()) {
            return Err(Error::Swallowed { time: t0 });
        }
    }
    Ok(out)
}

/// `g_T(z)` by integrating `dg/dt = 2 / (g - W_t)`.
pub fn chordal_forward(driving: &DrivingFunction, z: C64, opts: &ForwardOptions) -> Result<C64> {
    if driving.kind != DrivingKind::Chordal {
        return Err(Error::invalid("chordal flow needs a chordal driving function"));
    }
    let mut g = [z];
    for k in 0..driving.steps() {
        let (t0, t1) = (driving.grid[k], driving.grid[k + 1]);
        let (w0, w1) = (driving.values[k], driving.values[k + 1]);
        let slope = (w1 - w0) / (t1 - t0);
        let wf = |t: f64| C64::new(w0 + slope * (t - t0), 0.0);
        let v = |g: &[C64; 1], t: f64| -> Result<[C64; 1]> {
            let d = g[0] - wf(t);
            if d.norm() < SWALLOW_TOL {
                return Err(Error::Swallowed { time: t });
            }
            Ok([d.inv() * 2.0])
        };
        let m = opts.substeps.max(1);
        let h = (t1 - t0) / m as f64;
        for j in 0..m {
            g = rk4_adaptive(g, t0 + j as f64 * h, h, &v, &wf, 0, opts.max_halvings)?;
        }
    }
    Ok(g[0])
}

fn step_primitive(base: f64, dt: f64, dw: f64, opts: &TraceOptions) -> (Primitive, TiltedSlit, f64) {
    if opts.vertical {
        let s = TiltedSlit::new(dt, 0.5);
        let b = base + dw;
        (
            Primitive::Slit {
                base: b,
                tau: dt,
                alpha: 0.5,
                grow: false,
            },
            s,
            b,
        )
    } else {
        let s = TiltedSlit::from_increment(dw, dt);
        (
            Primitive::Slit {
                base,
                tau: s.tau,
                alpha: s.alpha,
                grow: false,
            },
            s,
            base,
        )
    }
}

/// Trace of the driving function by composing tilted slit maps.
pub fn chordal_trace(driving: &DrivingFunction, opts: &TraceOptions) -> Result<TraceResult> {
    if driving.kind != DrivingKind::Chordal {
        return Err(Error::invalid("chordal trace needs a chordal driving function"));
    }
    if driving.len() < 2 {
        return Err(Error::invalid("driving function needs at least two grid points"));
    }
    let n = driving.steps();
    let mut slits: Vec<(f64, TiltedSlit)> = Vec::with_capacity(n);
    let mut chain = MapChain::identity();
    let mut points = Vec::with_capacity(n + 1);
    points.push(C64::new(driving.values[0], 0.0));
    for (k, (dt, dw)) in driving.increments().enumerate() {
        let (prim, slit, base) = step_primitive(driving.values[k], dt, dw, opts);
        let mut z = C64::new(base, 0.0) + slit.tip();
        for &(b, ref s) in slits.iter().rev() {
            z = C64::new(b, 0.0) + s.forward(z - b)?;
        }
        points.push(z);
        slits.push((base, slit));
        chain.push(prim);
    }
    let curve = CurvePath::new(Chart::H, points)
        .with_times(driving.grid.clone())
        .with_marked(Marked {
            start: Some(ExtPoint::Finite(C64::new(driving.values[0], 0.0))),
            end: None,
            target: None,
        });
    Ok(TraceResult {
        curve,
        chain,
        capacity: driving.horizon(),
    })
}

/// Inverse zipper: peel the polyline off vertex by vertex.
pub fn extract_driving(curve: &CurvePath) -> Result<DrivingFunction> {
    Ok(extract_with_chain(curve)?.0)
}

/// Extraction that also returns the unzipping chain `g_T`.
pub fn extract_with_chain(curve: &CurvePath) -> Result<(DrivingFunction, MapChain)> {
    if curve.chart != Chart::H {
        return Err(Error::ChartMismatch);
    }
    if curve.len() < 2 {
        return Err(Error::invalid("curve needs at least two vertices"));
    }
    let x = curve.points[0];
    if x.im.abs() > 1e-12 {
        return Err(Error::invalid("chordal curve must start on the real line"));
    }
    curve.check_simple()?;
    let m = curve.len();
    let mut pts: Vec<C64> = curve.points[1..].to_vec();
    let mut grid = Vec::with_capacity(m);
    let mut values = Vec::with_capacity(m);
    let mut chain = MapChain::identity();
    let mut t = 0.0;
    let mut w = x.re;
    grid.push(0.0);
    values.push(w);
    for k in 0..m - 1 {
        let rel = pts[k] - w;
        if !(rel.im > 0.0) {
            return Err(Error::SelfIntersecting { vertex: k + 1 });
        }
        let s = TiltedSlit::from_tip(rel)?;
        for p in pts[k + 1..].iter_mut() {
            let q = s.inverse(*p - w)?;
            *p = q + w;
        }
        chain.push(Primitive::Slit {
            base: w,
            tau: s.tau,
            alpha: s.alpha,
            grow: false,
        });
        t += s.tau;
        w += s.w_star();
        grid.push(t);
        values.push(w);
    }
    Ok((DrivingFunction::new(DrivingKind::Chordal, grid, values)?, chain))
}

/// Half-plane capacity of a curve attached to the real line.
pub fn halfplane_capacity(curve: &CurvePath) -> Result<f64> {
    Ok(extract_driving(curve)?.horizon())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_driver_closed_forms() {
        let d = DrivingFunction::zero(DrivingKind::Chordal, 1.0, 100);
        let g = chordal_forward(&d, C64::new(3.0, 0.0), &ForwardOptions::default()).unwrap();
        assert!((g.re - 13f64.sqrt()).abs() < 1e-10 && g.im.abs() < 1e-12);
        let d0 = DrivingFunction::new(DrivingKind::Chordal, alloc::vec![0.0], alloc::vec![0.3]).unwrap();
        let z = C64::new(0.2, 0.7);
        assert_eq!(chordal_forward(&d0, z, &ForwardOptions::default()).unwrap(), z);
        let tr = chordal_trace(&d, &TraceOptions::default()).unwrap();
        assert!((tr.curve.tip() - C64::new(0.0, 2.0)).norm() < 1e-12);
        assert!(tr.curve.points.iter().all(|p| p.re.abs() < 1e-12));
    }

    #[test]
    fn swallowed_point_is_reported() {
        let d = DrivingFunction::zero(DrivingKind::Chordal, 1.0, 100);
        let err = chordal_forward(&d, C64::new(0.0, 1.0), &ForwardOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Swallowed { .. }));
    }

    #[test]
    fn forward_ode_matches_zipper_chain() {
        let d = DrivingFunction::from_fn(DrivingKind::Chordal, 1.0, 400, |t| 0.5 * (3.0 * t).sin()).unwrap();
        let tr = chordal_trace(&d, &TraceOptions::default()).unwrap();
        let z = C64::new(0.4, 1.5);
        let a = chordal_forward(&d, z, &ForwardOptions { substeps: 4, ..Default::default() }).unwrap();
        let b = tr.chain.eval(z).unwrap();
        assert!((a - b).norm() < 1e-3, "{a} {b}");
    }

    #[test]
    fn capacity_of_segments() {
        let seg = |h: f64, n: usize| CurvePath::new(Chart::H, (0..=n).map(|k| C64::new(0.0, h * k as f64 / n as f64)).collect());
        assert!((halfplane_capacity(&seg(2.0, 50)).unwrap() - 1.0).abs() < 1e-10);
        assert!((halfplane_capacity(&seg(1.0, 50)).unwrap() - 0.25).abs() < 1e-10);
        let w = extract_driving(&seg(2.0, 50)).unwrap();
        assert!(w.values.iter().all(|v| v.abs() < 1e-10));
    }
}
