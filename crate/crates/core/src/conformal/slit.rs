//! Tilted slit maps of the upper half-plane.
//!
//! `S(w) = (w - x1)^a (w - x2)^(1 - a)` maps the upper half-plane onto the
//! upper half-plane minus a straight slit from 0 at angle `pi (1 - a)`, with
//! `S(w) = w - 2 tau / w + O(w^-2)` at infinity. The slit tip is `S(w*)`.

use crate::{Error, Result, C64};
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

use super::map::Jet;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TiltedSlit {
    pub tau: f64,
    pub alpha: f64,
    pub x1: f64,
    pub x2: f64,
}

/// Logarithm with argument in (-pi/2, 3pi/2], so both sides of the real
/// axis continue analytically from the upper half-plane.
#[inline]
pub(crate) fn log_up(z: C64) -> C64 {
    let mut arg = z.im.atan2(z.re);
    if arg <= -core::f64::consts::FRAC_PI_2 {
        arg += 2.0 * core::f64::consts::PI;
    }
    C64::new(z.norm().ln(), arg)
}

impl TiltedSlit {
    pub fn new(tau: f64, alpha: f64) -> Self {
        debug_assert!(tau >= 0.0 && alpha > 0.0 && alpha < 1.0);
        let x1 = -2.0 * (tau * (1.0 - alpha) / alpha).sqrt();
        let x2 = 2.0 * (tau * alpha / (1.0 - alpha)).sqrt();
        TiltedSlit { tau, alpha, x1, x2 }
    }

    /// Slit whose angle matches a driving increment `dw` over capacity `dt`.
    pub fn from_increment(dw: f64, dt: f64) -> Self {
        let r = dw / (2.0 * dt.sqrt());
        let alpha = 0.5 + r / (2.0 * (4.0 + r * r).sqrt());
        Self::new(dt, alpha)
    }

    /// Inverse of [`from_increment`]: the driving increment produced by
    /// unzipping this slit.
    pub fn increment(&self) -> f64 {
        let a = self.alpha;
        2.0 * self.tau.sqrt() * (2.0 * a - 1.0) / (a * (1.0 - a)).sqrt()
    }

    /// Preimage of the tip; unzipping sends the tip here.
    pub fn w_star(&self) -> f64 {
        self.increment()
    }

    pub fn tip(&self) -> C64 {
        let a = self.alpha;
        let r = 2.0 * self.tau.sqrt() * a.powf(a - 0.5) * (1.0 - a).powf(0.5 - a);
        C64::from_polar(r, core::f64::consts::PI * (1.0 - a))
    }

    /// Slit with the given tip (tip must lie in the open upper half-plane).
    pub fn from_tip(tip: C64) -> Result<Self> {
        if !(tip.im > 0.0) || !tip.re.is_finite() {
            return Err(Error::Singular {
                map: "slit tip",
                at: (tip.re, tip.im),
            });
        }
        let theta = tip.im.atan2(tip.re);
        let a = 1.0 - theta / core::f64::consts::PI;
        let scale = a.powf(a - 0.5) * (1.0 - a).powf(0.5 - a);
        let s = tip.norm() / (2.0 * scale);
        Ok(Self::new(s * s, a))
    }

    /// Jet of `S` at `w`.
    pub fn forward_jet(&self, w: C64) -> Result<Jet> {
        let u1 = w - self.x1;
        let u2 = w - self.x2;
        if u1.norm_sqr() == 0.0 || u2.norm_sqr() == 0.0 {
            return Err(Error::Singular {
                map: "slit",
                at: (w.re, w.im),
            });
        }
        let a = self.alpha;
        let b = 1.0 - a;
        let v = (log_up(u1) * a + log_up(u2) * b).exp();
        let i1 = u1.inv();
        let i2 = u2.inv();
        let p = i1 * a + i2 * b;
        let l2 = -(i1 * i1 * a + i2 * i2 * b);
        let l3 = (i1 * i1 * i1 * a + i2 * i2 * i2 * b) * 2.0;
        Ok(Jet {
            v,
            d1: v * p,
            d2: v * (p * p + l2),
            d3: v * (p * p * p + p * l2 * 3.0 + l3),
        })
    }

    pub fn forward(&self, w: C64) -> Result<C64> {
        Ok(self.forward_jet(w)?.v)
    }

    /// `S^{-1}(z)` on the closed upper half-plane by damped Newton iteration
    /// on the logarithm of `S`.
    pub fn inverse(&self, z: C64) -> Result<C64> {
        if z.norm_sqr() == 0.0 {
            return Ok(C64::new(self.w_star(), 0.0));
        }
        let mut z = z;
        if z.im < 0.0 && z.im > -1e-12 * z.norm() {
            z.im = 0.0;
        }
        let mut w0 = (z * z + 4.0 * self.tau).sqrt();
        if w0.im < 0.0 || (w0.im == 0.0 && z.re < 0.0) {
            w0 = -w0;
        }
        let scale = self.tau.sqrt().max(z.norm()).max(1e-300);
        let (mut w, mut r) = self.newton(z, w0, scale);
        if r >= 1e-10 {
            // Continue inward along the ray through z, which misses the slit.
            let far = (20.0 * self.tip().norm() / z.norm()).max(20.0);
            let steps = (far.ln() / 1.2f64.ln()).ceil() as usize;
            let zf = z * far;
            w = zf + zf.inv() * (2.0 * self.tau);
            for k in (0..=steps).rev() {
                let zk = z * far.powf(k as f64 / steps as f64);
                let (wk, rk) = self.newton(zk, w, scale.max(zk.norm()));
                w = wk;
                r = rk;
            }
        }
        if r < 1e-10 {
            if w.im < 0.0 && w.im > -1e-9 * scale {
                w.im = 0.0;
            }
            Ok(w)
        } else {
            Err(Error::NoConvergence {
                what: "slit inverse",
            })
        }
    }

    fn newton(&self, z: C64, mut w: C64, scale: f64) -> (C64, f64) {
        let a = self.alpha;
        let b = 1.0 - a;
        let target = log_up(z);
        let residual = |w: C64| -> C64 { log_up(w - self.x1) * a + log_up(w - self.x2) * b - target };
        let mut r = residual(w);
        for _ in 0..100 {
            if r.norm() < 1e-15 {
                break;
            }
            let p = (w - self.x1).inv() * a + (w - self.x2).inv() * b;
            let mut step = r / p;
            if !step.re.is_finite() || !step.im.is_finite() {
                step = C64::new(0.0, -1e-3 * scale);
            }
            let mut lam = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let cand = w - step * lam;
                if cand.im < -1e-12 * scale {
                    lam *= 0.5;
                    continue;
                }
                let rc = residual(cand);
                if rc.norm() < r.norm() || rc.norm() < 1e-15 {
                    w = cand;
                    r = rc;
                    accepted = true;
                    break;
                }
                lam *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (w, r.norm())
    }

    /// Real preimage of a real boundary point `x`: on `[x2, inf)` for
    /// `x >= 0` (the right side of the slit base) and on `(-inf, x1]` for
    /// `x < 0`.
    pub fn inverse_real(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(self.x2);
        }
        let a = self.alpha;
        let right = x > 0.0;
        let (mut lo, mut hi) = if right {
            ((x + self.x1).max(self.x2), x + self.x2)
        } else {
            (x + self.x1, (x + self.x2).min(self.x1))
        };
        let target = x.abs().ln();
        let f = |w: f64| a * (w - self.x1).abs().ln() + (1.0 - a) * (w - self.x2).abs().ln() - target;
        let df = |w: f64| a / (w - self.x1) + (1.0 - a) / (w - self.x2);
        let mut w = 0.5 * (lo + hi);
        for _ in 0..200 {
            let fw = f(w);
            if fw.abs() < 1e-15 || hi - lo <= 1e-15 * (1.0 + w.abs()) {
                break;
            }
            // f is increasing on the right branch and decreasing on the left.
            if (fw > 0.0) == right {
                hi = w;
            } else {
                lo = w;
            }
            let cand = w - fw / df(w);
            w = if cand > lo && cand < hi { cand } else { 0.5 * (lo + hi) };
        }
        if f(w).abs() < 1e-10 || hi - lo <= 1e-12 * (1.0 + w.abs()) {
            Ok(w)
        } else {
            Err(Error::NoConvergence { what: "real slit inverse" })
        }
    }

    /// Jet of `S^{-1}` at `z`.
    pub fn inverse_jet(&self, z: C64) -> Result<Jet> {
        let w = self.inverse(z)?;
        let f = self.forward_jet(w)?;
        if f.d1.norm_sqr() == 0.0 {
            return Err(Error::Singular {
                map: "slit inverse",
                at: (z.re, z.im),
            });
        }
        Ok(f.invert(w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_inverse_branches() {
        let s = TiltedSlit::new(0.3, 0.37);
        for &x in &[1e-6, 0.01, 0.5, 3.0, 40.0, -1e-4, -0.2, -7.0] {
            let w = s.inverse_real(x).unwrap();
            assert!(if x > 0.0 { w >= s.x2 } else { w <= s.x1 });
            let back = s.forward(C64::new(w, 0.0)).unwrap();
            // Near the base the preimage sits within rounding of x1 or x2.
            let tol = if x.abs() < 0.01 { 1e-3 * x.abs() } else { 1e-9 * (1.0 + x.abs()) };
            assert!((back.re - x).abs() < tol && back.im.abs() < 1e-9, "{x} {back}");
        }
    }

    #[test]
    fn vertical_slit_is_square_root() {
        let s = TiltedSlit::new(1.0, 0.5);
        let z = C64::new(0.3, 0.7);
        let w = s.inverse(z).unwrap();
        let exact = (z * z + 4.0).sqrt();
        assert!((w - exact).norm() < 1e-12);
        assert!((s.tip() - C64::new(0.0, 2.0)).norm() < 1e-12);
        assert!(s.w_star().abs() < 1e-15);
    }

    #[test]
    fn tip_is_image_of_critical_point() {
        for &(tau, a) in &[(0.01, 0.3), (0.5, 0.62), (2.0, 0.9)] {
            let s = TiltedSlit::new(tau, a);
            let t = s.forward(C64::new(s.w_star(), 0.0)).unwrap();
            assert!((t - s.tip()).norm() < 1e-12 * (1.0 + t.norm()));
            let back = TiltedSlit::from_tip(s.tip()).unwrap();
            assert!((back.alpha - a).abs() < 1e-12 && (back.tau - tau).abs() < 1e-12 * tau.max(1.0));
            let s2 = TiltedSlit::from_increment(s.increment(), tau);
            assert!((s2.alpha - a).abs() < 1e-12);
        }
    }

    #[test]
    fn capacity_normalization_at_infinity() {
        let s = TiltedSlit::new(0.7, 0.35);
        let w = C64::new(3.0e3, 1.0e3);
        let lhs = (s.forward(w).unwrap() - w) * w;
        assert!((lhs - C64::new(-1.4, 0.0)).norm() < 1e-2);
    }
}
