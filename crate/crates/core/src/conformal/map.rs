//! Analytic maps with exact derivatives up to third order.

use alloc::vec::Vec;

use super::slit::TiltedSlit;
use crate::{Error, Result, C64};
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

/// Value and first three derivatives of an analytic map at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: C64,
    pub d1: C64,
    pub d2: C64,
    pub d3: C64,
}

impl Jet {
    pub fn identity(z: C64) -> Self {
        Jet {
            v: z,
            d1: C64::new(1.0, 0.0),
            d2: C64::new(0.0, 0.0),
            d3: C64::new(0.0, 0.0),
        }
    }

    /// Jet of `outer ∘ inner`, where `outer` is evaluated at `inner.v`.
    pub fn then(&self, outer: &Jet) -> Jet {
        let g1 = self.d1;
        let g2 = self.d2;
        let g3 = self.d3;
        Jet {
            v: outer.v,
            d1: outer.d1 * g1,
            d2: outer.d2 * g1 * g1 + outer.d1 * g2,
            d3: outer.d3 * g1 * g1 * g1 + outer.d2 * g1 * g2 * 3.0 + outer.d1 * g3,
        }
    }

    /// Jet of the local inverse at `self.v`, given the source point `at`.
    pub fn invert(&self, at: C64) -> Jet {
        let w1 = self.d1.inv();
        let w2 = -self.d2 * w1 * w1 * w1;
        let w3 = -self.d3 * w1 * w1 * w1 * w1 + self.d2 * self.d2 * w1.powi(5) * 3.0;
        Jet {
            v: at,
            d1: w1,
            d2: w2,
            d3: w3,
        }
    }

    pub fn schwarzian(&self) -> C64 {
        let r = self.d2 / self.d1;
        self.d3 / self.d1 - r * r * 1.5
    }
}

/// Primitive analytic maps a [`MapChain`] is built from.
#[derive(Clone, Debug, PartialEq)]
pub enum Primitive {
    /// `(a z + b) / (c z + d)`.
    Mobius { a: C64, b: C64, c: C64, d: C64 },
    /// `(z - i) / (z + i)` when `to_disk`, its inverse otherwise.
    Cayley { to_disk: bool },
    /// Tilted slit map based at `base`; `grow` adds the slit, otherwise it is removed.
    Slit {
        base: f64,
        tau: f64,
        alpha: f64,
        grow: bool,
    },
    /// `z^p` with argument taken in `(cut, cut + 2 pi]`.
    Power { exponent: f64, cut: f64 },
    /// `exp(s z)`; `cut` is the branch used by the inverse logarithm.
    Exp { scale: C64, cut: f64 },
    /// `s log z` with argument in `(cut, cut + 2 pi]`.
    Log { scale: C64, cut: f64 },
    /// `post . S^-1 . pre` for a tilted slit `S` at 0 (`post . S . pre` when
    /// `grow`), evaluated in the reciprocal chart when `pre(z)` is large.
    Zip {
        pre: [C64; 4],
        post: [C64; 4],
        tau: f64,
        alpha: f64,
        grow: bool,
    },
    /// `sum_k c_k z^k`.
    Polynomial { coeffs: Vec<C64> },
    /// Local inverse of a near-identity polynomial, by Newton iteration from `z`.
    InversePolynomial { coeffs: Vec<C64> },
}

fn singular(map: &'static str, z: C64) -> Error {
    Error::Singular {
        map,
        at: (z.re, z.im),
    }
}

fn log_cut(z: C64, cut: f64) -> C64 {
    let two_pi = 2.0 * core::f64::consts::PI;
    let mut arg = z.im.atan2(z.re);
    while arg <= cut {
        arg += two_pi;
    }
    while arg > cut + two_pi {
        arg -= two_pi;
    }
    C64::new(z.norm().ln(), arg)
}

fn cayley_coeffs(to_disk: bool) -> [C64; 4] {
    let i = C64::i();
    let one = C64::new(1.0, 0.0);
    if to_disk {
        [one, -i, one, i]
    } else {
        [i, i, -one, one]
    }
}

fn mobius_jet(m: [C64; 4], z: C64) -> Result<Jet> {
    let [a, b, c, d] = m;
    let den = c * z + d;
    if den.norm_sqr() == 0.0 {
        return Err(singular("mobius", z));
    }
    let det = a * d - b * c;
    let q = den.inv();
    let d1 = det * q * q;
    Ok(Jet {
        v: (a * z + b) * q,
        d1,
        d2: -d1 * c * q * 2.0,
        d3: d1 * c * c * q * q * 6.0,
    })
}

fn poly_jet(coeffs: &[C64], z: C64) -> Jet {
    let zero = C64::new(0.0, 0.0);
    let (mut v, mut d1, mut d2, mut d3) = (zero, zero, zero, zero);
    for &c in coeffs.iter().rev() {
        d3 = d3 * z + d2 * 3.0;
        d2 = d2 * z + d1 * 2.0;
        d1 = d1 * z + v;
        v = v * z + c;
    }
    Jet { v, d1, d2, d3 }
}

impl Primitive {
    pub fn mobius(a: C64, b: C64, c: C64, d: C64) -> Self {
        Primitive::Mobius { a, b, c, d }
    }

    pub fn rotation(theta: f64) -> Self {
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        Primitive::Mobius {
            a: C64::from_polar(1.0, theta),
            b: zero,
            c: zero,
            d: one,
        }
    }

    pub fn affine(a: C64, b: C64) -> Self {
        Primitive::Mobius {
            a,
            b,
            c: C64::new(0.0, 0.0),
            d: C64::new(1.0, 0.0),
        }
    }

    pub fn jet(&self, z: C64) -> Result<Jet> {
        match self {
            Primitive::Mobius { a, b, c, d } => mobius_jet([*a, *b, *c, *d], z),
            Primitive::Cayley { to_disk } => mobius_jet(cayley_coeffs(*to_disk), z),
            Primitive::Slit {
                base,
                tau,
                alpha,
                grow,
            } => {
                let s = TiltedSlit::new(*tau, *alpha);
                let mut j = if *grow {
                    s.forward_jet(z - *base)?
                } else {
                    s.inverse_jet(z - *base)?
                };
                j.v += *base;
                Ok(j)
            }
            Primitive::Power { exponent, cut } => {
                if z.norm_sqr() == 0.0 {
                    return Err(singular("power", z));
                }
                let p = *exponent;
                let v = (log_cut(z, *cut) * p).exp();
                let q = z.inv();
                Ok(Jet {
                    v,
                    d1: v * q * p,
                    d2: v * q * q * (p * (p - 1.0)),
                    d3: v * q * q * q * (p * (p - 1.0) * (p - 2.0)),
                })
            }
            Primitive::Exp { scale, .. } => {
                let s = *scale;
                let v = (s * z).exp();
                Ok(Jet {
                    v,
                    d1: v * s,
                    d2: v * s * s,
                    d3: v * s * s * s,
                })
            }
            Primitive::Log { scale, cut } => {
                if z.norm_sqr() == 0.0 {
                    return Err(singular("log", z));
                }
                let s = *scale;
                let q = z.inv();
                Ok(Jet {
                    v: log_cut(z, *cut) * s,
                    d1: s * q,
                    d2: -s * q * q,
                    d3: s * q * q * q * 2.0,
                })
            }
            Primitive::Polynomial { coeffs } => Ok(poly_jet(coeffs, z)),
            Primitive::InversePolynomial { coeffs } => {
                let w = newton_poly_inverse(coeffs, z)?;
                Ok(poly_jet(coeffs, w).invert(w))
            }
            Primitive::Zip {
                pre,
                post,
                tau,
                alpha,
                grow,
            } => zip_jet(pre, post, &TiltedSlit::new(*tau, *alpha), *grow, z),
        }
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        match self {
            Primitive::Slit {
                base,
                tau,
                alpha,
                grow,
            } => {
                let s = TiltedSlit::new(*tau, *alpha);
                let w = if *grow {
                    s.forward(z - *base)?
                } else {
                    s.inverse(z - *base)?
                };
                Ok(w + *base)
            }
            Primitive::InversePolynomial { coeffs } => newton_poly_inverse(coeffs, z),
            Primitive::Zip {
                pre,
                post,
                tau,
                alpha,
                grow,
            } => zip_eval(pre, post, &TiltedSlit::new(*tau, *alpha), *grow, z),
            _ => Ok(self.jet(z)?.v),
        }
    }

    /// Schwarzian derivative, in closed form where one is available.
    pub fn schwarzian(&self, z: C64) -> Result<C64> {
        match self {
            Primitive::Mobius { a, b, c, d } => {
                mobius_jet([*a, *b, *c, *d], z)?;
                Ok(C64::new(0.0, 0.0))
            }
            Primitive::Cayley { to_disk } => {
                mobius_jet(cayley_coeffs(*to_disk), z)?;
                Ok(C64::new(0.0, 0.0))
            }
            Primitive::Power { exponent, .. } => {
                if z.norm_sqr() == 0.0 {
                    return Err(singular("power", z));
                }
                Ok((z * z).inv() * ((1.0 - exponent * exponent) / 2.0))
            }
            Primitive::Exp { scale, .. } => Ok(-scale * scale * 0.5),
            Primitive::Log { .. } => {
                if z.norm_sqr() == 0.0 {
                    return Err(singular("log", z));
                }
                Ok((z * z).inv() * 0.5)
            }
            _ => Ok(self.jet(z)?.schwarzian()),
        }
    }

    pub fn inverse(&self) -> Primitive {
        match self {
            Primitive::Mobius { a, b, c, d } => Primitive::Mobius {
                a: *d,
                b: -*b,
                c: -*c,
                d: *a,
            },
            Primitive::Cayley { to_disk } => Primitive::Cayley { to_disk: !to_disk },
            Primitive::Slit {
                base,
                tau,
                alpha,
                grow,
            } => Primitive::Slit {
                base: *base,
                tau: *tau,
                alpha: *alpha,
                grow: !grow,
            },
            Primitive::Power { exponent, cut } => Primitive::Power {
                exponent: 1.0 / exponent,
                cut: cut * exponent,
            },
            Primitive::Exp { scale, cut } => Primitive::Log {
                scale: scale.inv(),
                cut: *cut,
            },
            Primitive::Log { scale, cut } => Primitive::Exp {
                scale: scale.inv(),
                cut: *cut,
            },
            Primitive::Polynomial { coeffs } => Primitive::InversePolynomial {
                coeffs: coeffs.clone(),
            },
            Primitive::InversePolynomial { coeffs } => Primitive::Polynomial {
                coeffs: coeffs.clone(),
            },
            Primitive::Zip {
                pre,
                post,
                tau,
                alpha,
                grow,
            } => Primitive::Zip {
                pre: adjugate(post),
                post: adjugate(pre),
                tau: *tau,
                alpha: *alpha,
                grow: !grow,
            },
        }
    }
}

fn adjugate(m: &[C64; 4]) -> [C64; 4] {
    [m[3], -m[1], -m[2], m[0]]
}

/// `|pre(z)|` beyond this multiple of the slit scale switches to the
/// reciprocal chart.
const ZIP_FAR: f64 = 20.0;

/// Jet of `E(w) = 1 / S(1 / w)`, analytic near `w = 0`.
fn reciprocal_slit_jet(s: &TiltedSlit, w: C64) -> Jet {
    let one = C64::new(1.0, 0.0);
    let (a, b) = (s.alpha, 1.0 - s.alpha);
    let q1 = (one - w * s.x1).inv();
    let q2 = (one - w * s.x2).inv();
    let l = -((one - w * s.x1).ln() * a + (one - w * s.x2).ln() * b);
    let l1 = q1 * (a * s.x1) + q2 * (b * s.x2);
    let l2 = q1 * q1 * (a * s.x1 * s.x1) + q2 * q2 * (b * s.x2 * s.x2);
    let l3 = (q1 * q1 * q1 * (a * s.x1.powi(3)) + q2 * q2 * q2 * (b * s.x2.powi(3))) * 2.0;
    let f = l.exp();
    let f1 = f * l1;
    let f2 = f * (l2 + l1 * l1);
    let f3 = f * (l3 + l1 * l2 * 3.0 + l1 * l1 * l1);
    Jet {
        v: w * f,
        d1: f + w * f1,
        d2: f1 * 2.0 + w * f2,
        d3: f2 * 3.0 + w * f3,
    }
}

fn reciprocal_slit_inverse(s: &TiltedSlit, zeta: C64) -> Result<Jet> {
    let mut w = zeta;
    for _ in 0..50 {
        let j = reciprocal_slit_jet(s, w);
        let r = j.v - zeta;
        if r.norm() <= 1e-16 * zeta.norm() {
            break;
        }
        w -= r / j.d1;
    }
    let j = reciprocal_slit_jet(s, w);
    if (j.v - zeta).norm() > 1e-12 * zeta.norm() {
        return Err(Error::NoConvergence {
            what: "reciprocal slit inverse",
        });
    }
    Ok(j.invert(w))
}

fn zip_jet(pre: &[C64; 4], post: &[C64; 4], s: &TiltedSlit, grow: bool, z: C64) -> Result<Jet> {
    let scale = s.x1.abs().max(s.x2.abs()).max(s.tau.sqrt());
    let recip = [pre[2], pre[3], pre[0], pre[1]];
    let zeta = mobius_jet(recip, z);
    if let Ok(zeta) = zeta {
        if zeta.v.norm() * scale * ZIP_FAR < 1.0 {
            // 1 / pre(z) -> 1 / S^{+-1}(pre(z)) -> post
            let mid = if grow {
                reciprocal_slit_jet(s, zeta.v)
            } else {
                reciprocal_slit_inverse(s, zeta.v)?
            };
            let out = mobius_jet([post[1], post[0], post[3], post[2]], mid.v)?;
            return Ok(zeta.then(&mid).then(&out));
        }
    }
    let h = mobius_jet(*pre, z)?;
    let mid = if grow {
        s.forward_jet(h.v)?
    } else {
        s.inverse_jet(h.v)?
    };
    let out = mobius_jet(*post, mid.v)?;
    Ok(h.then(&mid).then(&out))
}

fn zip_eval(pre: &[C64; 4], post: &[C64; 4], s: &TiltedSlit, grow: bool, z: C64) -> Result<C64> {
    let scale = s.x1.abs().max(s.x2.abs()).max(s.tau.sqrt());
    let num = pre[0] * z + pre[1];
    let den = pre[2] * z + pre[3];
    if num.norm_sqr() > 0.0 && (den / num).norm() * scale * ZIP_FAR < 1.0 {
        return Ok(zip_jet(pre, post, s, grow, z)?.v);
    }
    if den.norm_sqr() == 0.0 {
        return Err(singular("mobius", z));
    }
    let h = num / den;
    let w = if grow { s.forward(h)? } else { s.inverse(h)? };
    let d = post[2] * w + post[3];
    if d.norm_sqr() == 0.0 {
        return Err(singular("mobius", w));
    }
    Ok((post[0] * w + post[1]) / d)
}

fn newton_poly_inverse(coeffs: &[C64], z: C64) -> Result<C64> {
    let mut w = z;
    for _ in 0..100 {
        let j = poly_jet(coeffs, w);
        let r = j.v - z;
        if r.norm() <= 1e-15 * (1.0 + z.norm()) {
            return Ok(w);
        }
        if j.d1.norm_sqr() == 0.0 {
            return Err(singular("polynomial inverse", w));
        }
        w -= r / j.d1;
    }
    if (poly_jet(coeffs, w).v - z).norm() < 1e-11 * (1.0 + z.norm()) {
        Ok(w)
    } else {
        Err(Error::NoConvergence {
            what: "polynomial inverse",
        })
    }
}

/// Composition of primitives, applied in order: `steps[0]` first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MapChain {
    pub steps: Vec<Primitive>,
}

impl MapChain {
    pub fn identity() -> Self {
        MapChain { steps: Vec::new() }
    }

    pub fn new(steps: Vec<Primitive>) -> Self {
        MapChain { steps }
    }

    pub fn single(p: Primitive) -> Self {
        MapChain { steps: alloc::vec![p] }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, p: Primitive) {
        self.steps.push(p);
    }

    /// `other ∘ self`.
    pub fn then(mut self, other: &MapChain) -> MapChain {
        self.steps.extend(other.steps.iter().cloned());
        self
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        let mut w = z;
        for p in &self.steps {
            w = p.eval(w)?;
            if !(w.re.is_finite() && w.im.is_finite()) {
                return Err(Error::NonFinite { what: "map chain" });
            }
        }
        Ok(w)
    }

    pub fn jet(&self, z: C64) -> Result<Jet> {
        let mut j = Jet::identity(z);
        for p in &self.steps {
            let outer = p.jet(j.v)?;
            j = j.then(&outer);
        }
        Ok(j)
    }

    pub fn derivative(&self, z: C64) -> Result<C64> {
        let mut w = z;
        let mut d = C64::new(1.0, 0.0);
        for p in &self.steps {
            let j = p.jet(w)?;
            d *= j.d1;
            w = j.v;
        }
        Ok(d)
    }

    /// Schwarzian of the composition by the cocycle rule
    /// `S(F ∘ G) = (SF ∘ G) G'^2 + SG`.
    pub fn schwarzian(&self, z: C64) -> Result<C64> {
        let mut w = z;
        let mut d = C64::new(1.0, 0.0);
        let mut s = C64::new(0.0, 0.0);
        for p in &self.steps {
            s += p.schwarzian(w)? * d * d;
            let j = p.jet(w)?;
            d *= j.d1;
            w = j.v;
        }
        Ok(s)
    }

    pub fn inverse(&self) -> MapChain {
        MapChain {
            steps: self.steps.iter().rev().map(Primitive::inverse).collect(),
        }
    }

    pub fn eval_inverse(&self, z: C64) -> Result<C64> {
        let mut w = z;
        for p in self.steps.iter().rev() {
            w = p.inverse().eval(w)?;
        }
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn closed_form_schwarzians() {
        let sq = MapChain::single(Primitive::Power {
            exponent: 2.0,
            cut: -core::f64::consts::PI,
        });
        let s = sq.schwarzian(c(1.0, 0.0)).unwrap();
        assert!((s - c(-1.5, 0.0)).norm() < 1e-14);
        let e = MapChain::single(Primitive::Exp {
            scale: c(1.0, 0.0),
            cut: -core::f64::consts::PI,
        });
        for z in [c(0.0, 0.0), c(1.3, -2.0)] {
            assert!((e.schwarzian(z).unwrap() - c(-0.5, 0.0)).norm() < 1e-14);
        }
        let m = MapChain::single(Primitive::mobius(c(1.0, 2.0), c(0.5, 0.0), c(0.3, -1.0), c(2.0, 0.0)));
        assert!(m.schwarzian(c(0.2, 0.4)).unwrap().norm() < 1e-14);
    }

    #[test]
    fn jet_schwarzian_matches_closed_forms() {
        let cases = [
            Primitive::Power {
                exponent: 0.37,
                cut: -core::f64::consts::PI,
            },
            Primitive::Log {
                scale: c(0.0, -1.0),
                cut: -core::f64::consts::PI,
            },
            Primitive::Exp {
                scale: c(0.5, 1.5),
                cut: 0.0,
            },
        ];
        let z = c(0.7, 0.4);
        for p in &cases {
            let a = p.schwarzian(z).unwrap();
            let b = p.jet(z).unwrap().schwarzian();
            assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()), "{p:?}");
        }
    }

    #[test]
    fn mobius_pole_is_rejected() {
        let cay = Primitive::Cayley { to_disk: true };
        assert!(cay.eval(c(0.0, -1.0)).is_err());
    }

    fn arb_primitive() -> impl Strategy<Value = Primitive> {
        prop_oneof![
            (-2.0..2.0f64, -2.0..2.0f64, -1.0..1.0f64, 0.5..2.0f64).prop_map(|(a, b, cc, d)| {
                Primitive::mobius(c(1.0 + 0.1 * a, 0.1 * b), c(a, 0.0), c(0.05 * cc, 0.05 * b), c(d, 0.0))
            }),
            (0.05..1.0f64, 0.2..0.8f64, -1.0..1.0f64).prop_map(|(tau, alpha, base)| Primitive::Slit {
                base,
                tau,
                alpha,
                grow: true
            }),
            (0.3..1.7f64).prop_map(|p| Primitive::Power {
                exponent: p,
                cut: -core::f64::consts::FRAC_PI_2
            }),
            (-0.2..0.2f64, -0.2..0.2f64).prop_map(|(a, b)| Primitive::Polynomial {
                coeffs: alloc::vec![c(0.0, 0.0), c(1.0, 0.0), c(a, b)]
            }),
        ]
    }

    proptest! {
        #[test]
        fn chain_rule_holds(ps in proptest::collection::vec(arb_primitive(), 1..5), x in -1.0..1.0f64, y in 0.5..2.0f64) {
            let chain = MapChain::new(ps.clone());
            let z = c(x, y);
            if let Ok(j) = chain.jet(z) {
                let head = MapChain::new(ps[..ps.len() - 1].to_vec());
                let last = ps.last().unwrap();
                let gj = head.jet(z).unwrap();
                let fj = last.jet(gj.v).unwrap();
                let d = fj.d1 * gj.d1;
                prop_assert!((j.d1 - d).norm() <= 1e-10 * j.d1.norm());
                let s_direct = j.schwarzian();
                let s_cocycle = chain.schwarzian(z).unwrap();
                prop_assert!((s_direct - s_cocycle).norm() <= 1e-8 * (1.0 + s_direct.norm()));
            }
        }

        #[test]
        fn mobius_postcomposition_keeps_schwarzian(ps in proptest::collection::vec(arb_primitive(), 1..4), x in -1.0..1.0f64, y in 0.5..2.0f64) {
            let z = c(x, y);
            let chain = MapChain::new(ps);
            if let Ok(s0) = chain.schwarzian(z) {
                let m = Primitive::mobius(c(0.0, 2.0), c(1.0, 0.0), c(0.3, 0.0), c(1.0, 1.0));
                let mut composed = chain.clone();
                composed.push(m);
                if let Ok(s1) = composed.schwarzian(z) {
                    prop_assert!((s0 - s1).norm() <= 1e-8 * (1.0 + s0.norm()));
                }
            }
        }

        #[test]
        fn chain_then_inverse_is_identity(ps in proptest::collection::vec(arb_primitive(), 1..4), x in -1.0..1.0f64, y in 0.5..2.0f64) {
            let z = c(x, y);
            let mut w = z;
            let mut inside = true;
            for p in &ps {
                // The quadratic is only univalent well inside |z| < 1/(2|a|).
                if let Primitive::Polynomial { coeffs } = p {
                    if (coeffs[2] * w * 2.0).norm() > 0.5 {
                        inside = false;
                        break;
                    }
                }
                match p.eval(w) {
                    Ok(v) if v.im > 1e-3 => w = v,
                    _ => { inside = false; break; }
                }
            }
            if inside {
                let chain = MapChain::new(ps);
                let back = chain.inverse().eval(w);
                prop_assert!(back.is_ok(), "{:?} {:?}", chain, back);
                let back = back.unwrap();
                prop_assert!((back - z).norm() < 1e-9 * (1.0 + z.norm()));
            }
        }
    }
}
