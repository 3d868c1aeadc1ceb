//! Radial Loewner evolution in the unit disk, aimed at 0.
//!
//! Each zipper step is a tilted slit map conjugated by the chart
//! `K(z) = i (1 - z) / (1 + z)` sending the driving point to 0 and the
//! disk center to `i`, followed by the disk automorphism restoring
//! `g(0) = 0` with positive derivative.

use alloc::vec::Vec;

use super::chordal::{rk4_adaptive, ForwardOptions};
use super::driving::{DrivingFunction, DrivingKind};
use super::TraceResult;
use crate::conformal::{Chart, CurvePath, ExtPoint, MapChain, Marked, Primitive, TiltedSlit};
use crate::{Error, Result, C64};
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

type Mat = [C64; 4];

fn mat_mul(outer: &Mat, inner: &Mat) -> Mat {
    let [a, b, c, d] = *outer;
    let [e, f, g, h] = *inner;
    [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h]
}

fn mat_apply(m: &Mat, z: C64) -> Result<C64> {
    let den = m[2] * z + m[3];
    if den.norm_sqr() == 0.0 {
        return Err(Error::Singular {
            map: "mobius",
            at: (z.re, z.im),
        });
    }
    Ok((m[0] * z + m[1]) / den)
}

fn chart_to_h() -> Mat {
    let i = C64::i();
    [-i, i, C64::new(1.0, 0.0), C64::new(1.0, 0.0)]
}

fn chart_to_d() -> Mat {
    let i = C64::i();
    [C64::new(-1.0, 0.0), i, C64::new(1.0, 0.0), i]
}

fn rot(theta: f64) -> Mat {
    let z = C64::new(0.0, 0.0);
    [C64::from_polar(1.0, theta), z, z, C64::new(1.0, 0.0)]
}

/// One radial zipper step `g = Rot_u . R . K^-1 . S^-1 . K . Rot_-u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialStep {
    /// Driving value at the start of the step.
    pub u: f64,
    pub slit: TiltedSlit,
    /// Zero of the normalizing automorphism.
    pub p: C64,
    /// Rotation of the normalizing automorphism.
    pub beta: f64,
    /// Radial capacity increment.
    pub dt: f64,
    /// Driving increment.
    pub du: f64,
}

impl RadialStep {
    pub fn from_slit(u: f64, slit: TiltedSlit) -> Result<Self> {
        let i = C64::i();
        let q = slit.inverse(i)?;
        let p = mat_apply(&chart_to_d(), q)?;
        let s1 = slit.forward_jet(q)?.d1;
        let gd = -C64::new(4.0, 0.0) / ((i + q) * (i + q) * s1);
        let beta = -gd.arg();
        let dt = (gd.norm() / (1.0 - p.norm_sqr())).ln();
        let mut step = RadialStep {
            u,
            slit,
            p,
            beta,
            dt,
            du: 0.0,
        };
        let ws = mat_apply(&chart_to_d(), C64::new(slit.w_star(), 0.0))?;
        step.du = step.automorphism(ws)?.arg();
        if !(dt.is_finite() && step.du.is_finite()) {
            return Err(Error::NonFinite { what: "radial step" });
        }
        Ok(step)
    }

    /// Step with prescribed capacity and driving increments.
    pub fn solve(u: f64, dt: f64, du: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::invalid("radial step needs positive capacity"));
        }
        let alpha_of = |r: f64| 0.5 + r / (2.0 * (4.0 + r * r).sqrt());
        let tau0 = dt / 4.0;
        let mut x = [tau0.ln(), du / 2.0 / (2.0 * tau0.sqrt())];
        let scale = dt.sqrt();
        let resid = |x: &[f64; 2]| -> Result<([f64; 2], RadialStep)> {
            let s = RadialStep::from_slit(u, TiltedSlit::new(x[0].exp(), alpha_of(x[1])))?;
            Ok(([s.dt.ln() - dt.ln(), (s.du - du) / scale], s))
        };
        let (mut f, mut best) = resid(&x)?;
        'newton: for _ in 0..60 {
            let norm = f[0].abs() + f[1].abs();
            if norm < 1e-13 {
                return Ok(best);
            }
            // Wider differences once rounding in the capacity dominates.
            let hstep = 1e-7f64.max((1e-16 / dt).sqrt());
            let mut jac = [[0.0; 2]; 2];
            for c in 0..2 {
                let mut xp = x;
                xp[c] += hstep;
                let mut xm = x;
                xm[c] -= hstep;
                let (fp, _) = resid(&xp)?;
                let (fm, _) = resid(&xm)?;
                for r in 0..2 {
                    jac[r][c] = (fp[r] - fm[r]) / (2.0 * hstep);
                }
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det.abs() < 1e-300 {
                break;
            }
            let dx = [
                (jac[1][1] * f[0] - jac[0][1] * f[1]) / det,
                (-jac[1][0] * f[0] + jac[0][0] * f[1]) / det,
            ];
            let mut lambda = 1.0;
            loop {
                let xn = [x[0] - lambda * dx[0], x[1] - lambda * dx[1]];
                if let Ok((fnew, snew)) = resid(&xn) {
                    if fnew[0].abs() + fnew[1].abs() < norm || lambda < 1e-4 {
                        x = xn;
                        f = fnew;
                        best = snew;
                        break;
                    }
                }
                lambda *= 0.5;
                if lambda < 1e-6 {
                    // Stalled at rounding level; the final check decides.
                    break 'newton;
                }
            }
        }
        // The capacity of a tiny slit is a difference of O(1) quantities.
        if f[0].abs() < 1e-9 + 1e-14 / dt && f[1].abs() < 1e-9 + 1e-14 / scale {
            Ok(best)
        } else {
            Err(Error::NoConvergence { what: "radial step" })
        }
    }

    fn automorphism(&self, z: C64) -> Result<C64> {
        let e = C64::from_polar(1.0, self.beta);
        let den = C64::new(1.0, 0.0) - self.p.conj() * z;
        if den.norm_sqr() == 0.0 {
            return Err(Error::Singular {
                map: "disk automorphism",
                at: (z.re, z.im),
            });
        }
        Ok(e * (z - self.p) / den)
    }

    fn pre(&self) -> Mat {
        mat_mul(&chart_to_h(), &rot(-self.u))
    }

    fn post(&self) -> Mat {
        let e = C64::from_polar(1.0, self.beta);
        let r = [e, -e * self.p, -self.p.conj(), C64::new(1.0, 0.0)];
        mat_mul(&rot(self.u), &mat_mul(&r, &chart_to_d()))
    }

    /// `g` on the slit disk.
    pub fn forward(&self, z: C64) -> Result<C64> {
        self.primitive().eval(z)
    }

    /// `g^-1`, adding the slit.
    pub fn inverse(&self, z: C64) -> Result<C64> {
        self.primitive().inverse().eval(z)
    }

    /// Tip of the slit on the disk side.
    pub fn tip(&self) -> Result<C64> {
        mat_apply(&mat_inv(&self.pre()), self.slit.tip())
    }

    /// Angle of the image of the point just counterclockwise of the
    /// driving point, i.e. of the right preimage of the slit base.
    pub fn boundary_angle_right(&self) -> Result<f64> {
        let z = mat_apply(&self.post(), C64::new(self.slit.x2, 0.0))?;
        let mut rel = z.arg() - (self.u + self.du);
        while rel <= 0.0 {
            rel += 2.0 * core::f64::consts::PI;
        }
        while rel > 2.0 * core::f64::consts::PI {
            rel -= 2.0 * core::f64::consts::PI;
        }
        Ok(self.u + self.du + rel)
    }

    /// The step as a chain primitive.
    pub fn primitive(&self) -> Primitive {
        Primitive::Zip {
            pre: self.pre(),
            post: self.post(),
            tau: self.slit.tau,
            alpha: self.slit.alpha,
            grow: false,
        }
    }
}

fn mat_inv(m: &Mat) -> Mat {
    [m[3], -m[1], -m[2], m[0]]
}

/// `(g_T(z), g_T'(z))` from `dg/dt = g (e^{iU} + g) / (e^{iU} - g)`.
pub fn radial_forward_jet(driving: &DrivingFunction, z: C64, opts: &ForwardOptions) -> Result<(C64, C64)> {
    if driving.kind != DrivingKind::Radial {
        return Err(Error::invalid("radial flow needs a radial driving function"));
    }
    let mut y = [z, C64::new(1.0, 0.0)];
    for k in 0..driving.steps() {
        let (t0, t1) = (driving.grid[k], driving.grid[k + 1]);
        let (u0, u1) = (driving.values[k], driving.values[k + 1]);
        let slope = (u1 - u0) / (t1 - t0);
        let wf = |t: f64| C64::from_polar(1.0, u0 + slope * (t - t0));
        let v = |y: &[C64; 2], t: f64| -> Result<[C64; 2]> {
            let a = wf(t);
            let g = y[0];
            let d = a - g;
            if d.norm() < super::chordal::SWALLOW_TOL {
                return Err(Error::Swallowed { time: t });
            }
            let q = d.inv();
            Ok([g * (a + g) * q, y[1] * (a * a + a * g * 2.0 - g * g) * q * q])
        };
        let m = opts.substeps.max(1);
        let h = (t1 - t0) / m as f64;
        for j in 0..m {
            y = rk4_adaptive(y, t0 + j as f64 * h, h, &v, &wf, 0, opts.max_halvings)?;
        }
    }
    Ok((y[0], y[1]))
}

pub fn radial_forward(driving: &DrivingFunction, z: C64, opts: &ForwardOptions) -> Result<C64> {
    Ok(radial_forward_jet(driving, z, opts)?.0)
}

/// Trace of a radial driving function by composing chart-conjugated slit maps.
pub fn radial_trace(driving: &DrivingFunction) -> Result<TraceResult> {
    if driving.kind != DrivingKind::Radial {
        return Err(Error::invalid("radial trace needs a radial driving function"));
    }
    if driving.len() < 2 {
        return Err(Error::invalid("driving function needs at least two grid points"));
    }
    let mut steps: Vec<RadialStep> = Vec::with_capacity(driving.steps());
    let mut chain = MapChain::identity();
    let start = C64::from_polar(1.0, driving.values[0]);
    let mut points = Vec::with_capacity(driving.len());
    points.push(start);
    for (k, (dt, du)) in driving.increments().enumerate() {
        let step = RadialStep::solve(driving.values[k], dt, du)?;
        let mut z = step.tip()?;
        for s in steps.iter().rev() {
            z = s.inverse(z)?;
        }
        points.push(z);
        chain.push(step.primitive());
        steps.push(step);
    }
    let curve = CurvePath::new(Chart::D, points)
        .with_times(driving.grid.clone())
        .with_marked(Marked {
            start: Some(ExtPoint::Finite(start)),
            end: None,
            target: Some(C64::new(0.0, 0.0)),
        });
    Ok(TraceResult {
        curve,
        chain,
        capacity: driving.horizon(),
    })
}

/// Radial inverse zipper for a polyline from the unit circle toward 0.
pub fn extract_radial(curve: &CurvePath) -> Result<(DrivingFunction, MapChain)> {
    if curve.chart != Chart::D {
        return Err(Error::ChartMismatch);
    }
    if curve.len() < 2 {
        return Err(Error::invalid("curve needs at least two vertices"));
    }
    let x = curve.points[0];
    if (x.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("radial curve must start on the unit circle"));
    }
    curve.check_simple()?;
    let m = curve.len();
    let mut pts: Vec<C64> = curve.points[1..].to_vec();
    let mut grid = Vec::with_capacity(m);
    let mut values = Vec::with_capacity(m);
    let mut chain = MapChain::identity();
    let (mut t, mut u) = (0.0, x.arg());
    grid.push(t);
    values.push(u);
    for k in 0..m - 1 {
        let rel = mat_apply(&mat_mul(&chart_to_h(), &rot(-u)), pts[k])?;
        if !(rel.im > 0.0) {
            return Err(Error::SelfIntersecting { vertex: k + 1 });
        }
        let step = RadialStep::from_slit(u, TiltedSlit::from_tip(rel)?)?;
        for p in pts[k + 1..].iter_mut() {
            *p = step.forward(*p)?;
        }
        chain.push(step.primitive());
        t += step.dt;
        u += step.du;
        grid.push(t);
        values.push(u);
    }
    Ok((DrivingFunction::new(DrivingKind::Radial, grid, values)?, chain))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_solve_roundtrip() {
        for &(dt, du) in &[(0.01, 0.0), (0.01, 0.05), (1e-4, -0.003), (0.1, 0.4)] {
            let s = RadialStep::solve(0.3, dt, du).unwrap();
            assert!((s.dt - dt).abs() < 1e-12 && (s.du - du).abs() < 1e-10, "{dt} {du} {s:?}");
            let g = s.forward(C64::new(0.0, 0.0)).unwrap();
            assert!(g.norm() < 1e-12);
            let tip_image = s.forward(s.tip().unwrap() * (1.0 - 1e-9)).unwrap();
            assert!((tip_image - C64::from_polar(1.0, 0.3 + du)).norm() < 1e-3);
            let z = C64::new(0.2, -0.4);
            assert!((s.inverse(s.forward(z).unwrap()).unwrap() - z).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_driver_gives_radius() {
        let d = DrivingFunction::zero(DrivingKind::Radial, 1.0, 50);
        let tr = radial_trace(&d).unwrap();
        for p in &tr.curve.points {
            assert!(p.im.abs() < 1e-10 && p.re > 0.0 && p.re <= 1.0 + 1e-12);
        }
        // The slit [r, 1] has conformal radius 4r / (1 + r)^2 seen from 0.
        let r = tr.curve.tip().re;
        assert!(((4.0 * r / (1.0 + r) / (1.0 + r)).ln() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn derivative_at_origin() {
        let d = DrivingFunction::from_fn(DrivingKind::Radial, 1.0, 200, |t| t.sin()).unwrap();
        let (g, dg) = radial_forward_jet(&d, C64::new(0.0, 0.0), &ForwardOptions::default()).unwrap();
        assert!(g.norm() < 1e-15);
        assert!((dg - C64::new(1f64.exp(), 0.0)).norm() < 1e-8);
        let tr = radial_trace(&d).unwrap();
        let jd = tr.chain.derivative(C64::new(0.0, 0.0)).unwrap();
        assert!((jd - C64::new(1f64.exp(), 0.0)).norm() < 1e-8, "{jd}");
    }

    #[test]
    fn ode_matches_chain_and_extraction() {
        let d = DrivingFunction::from_fn(DrivingKind::Radial, 0.5, 400, |t| 0.4 * (2.0 * t).sin()).unwrap();
        let tr = radial_trace(&d).unwrap();
        let z = C64::new(-0.3, 0.2);
        let a = radial_forward(&d, z, &ForwardOptions { substeps: 4, ..Default::default() }).unwrap();
        let b = tr.chain.eval(z).unwrap();
        assert!((a - b).norm() < 2e-3, "{a} {b}");
        let (back, _) = extract_radial(&tr.curve).unwrap();
        assert!(back.sup_distance(&d) < 1e-6, "{}", back.sup_distance(&d));
    }
}
