//! Multi-radial potential through the multi-time decomposition.
//!
//! For arcs `gamma_1..gamma_n` aimed at 0 with radial drivers `U^(j)`, the
//! potential up to the multi-time `T` is
//!
//! ```text
//! sum_j I^R(U^(j)) / 12 + m_T
//!   - ((n^2 + 3n - 4 - mu^2) / 24) log g_T'(0)
//!   - (1/4) sum_j (log phi_{T,j}'(U^(j)) - (1/2) log g_{T,j}'(0))
//!   - (1/6) sum_{j<l} log |sin((theta_j - theta_l) / 2)| - (mu / 12) sum_j theta_j
//! ```
//!
//! where `g_{T,j}` removes the images of the other arcs under the single-arc
//! map `g^(j)`, `phi_{T,j}` is its covering map and `theta_j = phi_{T,j}(U^(j))`.
//! The loop term `m` is integrated along a staircase in multi-time.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::potential::{PotentialReport, Term};
use super::quadrature::radial_energy;
use crate::conformal::{Chart, CurvePath, Jet, MapChain, SegmentGrid};
use crate::loewner::{extract_radial, radial_trace, DrivingFunction, DrivingKind, RadialStep};
use crate::{Error, Result, C64};
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

/// Integrand of the loop term `dm = sum_j (...) dt_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LoopTermForm {
    /// `-(1/3) S phi + (1/6) (1 - phi')`. Depends on the staircase path.
    Printed,
    /// `-(1/3) S phi + (1/6) (1 - phi'^2)`. Path-independent; for `n = 2`
    /// the loop term agrees with the Brownian loop mass of the two arcs.
    #[default]
    Squared,
}

impl LoopTermForm {
    pub fn integrand(&self, schwarzian: f64, dphi: f64) -> f64 {
        let tail = match self {
            LoopTermForm::Printed => 1.0 - dphi,
            LoopTermForm::Squared => 1.0 - dphi * dphi,
        };
        -schwarzian / 3.0 + tail / 6.0
    }
}

/// Monotone path from multi-time 0 to the full horizons.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum Staircase {
    /// Arc 0 to its end, then arc 1, and so on.
    #[default]
    IndexOrder,
    /// Arcs in the given order, each to its end.
    Order(Vec<usize>),
    /// Round-robin, advancing each arc by `chunk` steps at a time.
    Alternating { arcs: Vec<usize>, chunk: usize },
}

impl Staircase {
    /// Sequence of `(arc, steps)` moves.
    fn moves(&self, lengths: &[usize]) -> Result<Vec<(usize, usize)>> {
        let n = lengths.len();
        let check = |order: &[usize]| -> Result<()> {
            let mut seen = vec![false; n];
            for &j in order {
                if j >= n || seen[j] {
                    return Err(Error::invalid("staircase order must be a permutation of the arcs"));
                }
                seen[j] = true;
            }
            if order.len() != n {
                return Err(Error::invalid("staircase order must be a permutation of the arcs"));
            }
            Ok(())
        };
        match self {
            Staircase::IndexOrder => Ok((0..n).map(|j| (j, lengths[j])).collect()),
            Staircase::Order(o) => {
                check(o)?;
                Ok(o.iter().map(|&j| (j, lengths[j])).collect())
            }
            Staircase::Alternating { arcs, chunk } => {
                check(arcs)?;
                if *chunk == 0 {
                    return Err(Error::invalid("staircase chunk must be positive"));
                }
                let mut left = lengths.to_vec();
                let mut out = Vec::new();
                while left.iter().any(|&l| l > 0) {
                    for &j in arcs {
                        let s = left[j].min(*chunk);
                        if s > 0 {
                            out.push((j, s));
                            left[j] -= s;
                        }
                    }
                }
                Ok(out)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiRadialOptions {
    pub mu: f64,
    pub form: LoopTermForm,
    pub staircase: Staircase,
}

impl Default for MultiRadialOptions {
    fn default() -> Self {
        MultiRadialOptions {
            mu: 0.0,
            form: LoopTermForm::Squared,
            staircase: Staircase::IndexOrder,
        }
    }
}

struct Arc {
    drive: DrivingFunction,
    steps: Vec<RadialStep>,
    points: Vec<C64>,
}

/// Covering-map data of `g` at the boundary point `e^{iu}`:
/// `(phi'(u), S phi(u), phi(u))` with `phi(u)` lifted next to `u`.
fn covering(g: &MapChain, u: f64) -> Result<(f64, f64, f64)> {
    let e = C64::from_polar(1.0, u);
    let i = C64::i();
    let inner = Jet {
        v: e,
        d1: i * e,
        d2: -e,
        d3: -i * e,
    };
    let mut j = inner;
    for p in &g.steps {
        let outer = p.jet(j.v)?;
        j = j.then(&outer);
    }
    let z = j.v;
    let q = z.inv();
    let log = Jet {
        v: C64::new(0.0, 0.0),
        d1: -i * q,
        d2: i * q * q,
        d3: -i * q * q * q * 2.0,
    };
    let phi = j.then(&log);
    let mut rel = z.arg() - u;
    let two_pi = 2.0 * core::f64::consts::PI;
    while rel > core::f64::consts::PI {
        rel -= two_pi;
    }
    while rel <= -core::f64::consts::PI {
        rel += two_pi;
    }
    Ok((phi.d1.re, phi.schwarzian().re, u + rel))
}

/// `g_{t,j}`: zips the images under `g^(j)` of the other arcs, in index order.
fn others_map(arcs: &[Arc], pos: &[usize], j: usize) -> Result<MapChain> {
    let mut images: Vec<Vec<C64>> = Vec::new();
    for (l, a) in arcs.iter().enumerate() {
        if l == j || pos[l] == 0 {
            continue;
        }
        let mut pts = a.points[..=pos[l]].to_vec();
        for s in &arcs[j].steps[..pos[j]] {
            for p in pts.iter_mut() {
                *p = s.forward(*p)?;
            }
        }
        pts[0] = pts[0] / pts[0].norm();
        images.push(pts);
    }
    let mut chain = MapChain::identity();
    for k in 0..images.len() {
        let curve = CurvePath::new(Chart::D, images[k].clone());
        let (_, c) = extract_radial(&curve)?;
        for rest in images[k + 1..].iter_mut() {
            for p in rest.iter_mut() {
                *p = c.eval(*p)?;
            }
            rest[0] = rest[0] / rest[0].norm();
        }
        chain = chain.then(&c);
    }
    Ok(chain)
}

/// Per-arc covering data at multi-time index `pos`.
fn local(arcs: &[Arc], pos: &[usize], j: usize) -> Result<(f64, f64, f64, f64)> {
    let u = arcs[j].drive.values[pos[j]];
    if arcs.iter().enumerate().all(|(l, _)| l == j || pos[l] == 0) {
        return Ok((1.0, 0.0, u, 0.0));
    }
    let g = others_map(arcs, pos, j)?;
    let (d, s, theta) = covering(&g, u)?;
    let log_g0 = g.derivative(C64::new(0.0, 0.0))?.norm().ln();
    Ok((d, s, theta, log_g0))
}

/// Multi-radial potential of arcs given by their radial drivers, each on
/// its own capacity grid up to its horizon.
pub fn multiradial_potential(arcs: &[DrivingFunction], opts: &MultiRadialOptions) -> Result<PotentialReport> {
    let n = arcs.len();
    if n == 0 {
        return Err(Error::invalid("multi-radial potential needs at least one arc"));
    }
    let mut data = Vec::with_capacity(n);
    for d in arcs {
        if d.kind != DrivingKind::Radial {
            return Err(Error::invalid("multi-radial arcs need radial drivers"));
        }
        let tr = radial_trace(d)?;
        let steps = d
            .increments()
            .enumerate()
            .map(|(k, (dt, du))| RadialStep::solve(d.values[k], dt, du))
            .collect::<Result<Vec<_>>>()?;
        data.push(Arc {
            drive: d.clone(),
            steps,
            points: tr.curve.points,
        });
    }
    for a in 0..n {
        for b in a + 1..n {
            let ga = SegmentGrid::from_polyline(&data[a].points);
            for w in data[b].points.windows(2) {
                if ga.crosses(w[0], w[1]) {
                    return Err(Error::NotDisjoint);
                }
            }
        }
    }
    let lengths: Vec<usize> = arcs.iter().map(|d| d.steps()).collect();
    let moves = opts.staircase.moves(&lengths)?;
    let mut pos = vec![0usize; n];
    let mut m = 0.0;
    for (j, count) in moves {
        let (d0, s0, _, _) = local(&data, &pos, j)?;
        let mut f_prev = opts.form.integrand(s0, d0);
        for _ in 0..count {
            let k = pos[j];
            let dt = data[j].drive.grid[k + 1] - data[j].drive.grid[k];
            pos[j] += 1;
            let (d1, s1, _, _) = local(&data, &pos, j)?;
            let f = opts.form.integrand(s1, d1);
            m += 0.5 * (f_prev + f) * dt;
            f_prev = f;
        }
    }
    let mut energy = 0.0;
    for d in arcs {
        energy += radial_energy(d)?;
    }
    let horizon = arcs.iter().map(|d| d.horizon()).fold(0.0, f64::max);
    let mut r = PotentialReport::new(energy, horizon, false);
    r.push("energy", energy / 12.0);
    r.push("loop_term", m);
    let mut thetas = Vec::with_capacity(n);
    let mut log_g_total = 0.0;
    let mut phi_terms = 0.0;
    for j in 0..n {
        let (d, _, theta, log_gj) = local(&data, &pos, j)?;
        if !(d > 0.0) {
            return Err(Error::NonFinite { what: "covering map derivative" });
        }
        thetas.push(theta);
        phi_terms += d.ln() - 0.5 * log_gj;
        if j == 0 {
            log_g_total = log_gj + arcs[0].horizon();
        }
    }
    let nf = n as f64;
    let mu = opts.mu;
    r.push("capacity", -(nf * nf + 3.0 * nf - 4.0 - mu * mu) / 24.0 * log_g_total);
    r.push("covering", -0.25 * phi_terms);
    let mut pair = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let s = ((thetas[a] - thetas[b]) / 2.0).sin().abs();
            if !(s > 0.0) {
                return Err(Error::invalid("coincident multi-time driving angles"));
            }
            pair += s.ln();
        }
    }
    r.push("angles", -pair / 6.0);
    r.push("spiral", -mu / 12.0 * thetas.iter().sum::<f64>());
    for (j, t) in thetas.iter().enumerate() {
        r.terms.push(Term {
            name: format!("theta[{j}]"),
            value: *t,
            stderr: f64::NAN,
        });
    }
    Ok(r)
}

/// Multi-radial potential of polyline arcs in `(D; x_1..x_n, 0)`, each
/// re-extracted by the radial inverse zipper.
pub fn multiradial_potential_from_curves(curves: &[CurvePath], opts: &MultiRadialOptions) -> Result<PotentialReport> {
    let drives = curves
        .iter()
        .map(|c| Ok(extract_radial(c)?.0))
        .collect::<Result<Vec<_>>>()?;
    multiradial_potential(&drives, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_arc(u0: f64, t: f64, n: usize) -> DrivingFunction {
        DrivingFunction::from_fn(DrivingKind::Radial, t, n, |_| u0).unwrap()
    }

    #[test]
    fn single_arc_reduces_to_radial_potential() {
        let d = DrivingFunction::from_fn(DrivingKind::Radial, 0.8, 60, |t| 0.3 * t.sin()).unwrap();
        let r = multiradial_potential(core::slice::from_ref(&d), &MultiRadialOptions::default()).unwrap();
        let e = radial_energy(&d).unwrap() / 12.0;
        assert!((r.total - e).abs() < 1e-12, "{} {}", r.total, e);
    }

    #[test]
    fn rotation_invariance() {
        let a = DrivingFunction::from_fn(DrivingKind::Radial, 0.5, 24, |t| 0.2 * t).unwrap();
        let b = DrivingFunction::from_fn(DrivingKind::Radial, 0.5, 24, |t| 3.0 - 0.1 * t).unwrap();
        let rot = |d: &DrivingFunction, s: f64| {
            DrivingFunction::new(DrivingKind::Radial, d.grid.clone(), d.values.iter().map(|v| v + s).collect()).unwrap()
        };
        let o = MultiRadialOptions::default();
        let r1 = multiradial_potential(&[a.clone(), b.clone()], &o).unwrap();
        let r2 = multiradial_potential(&[rot(&a, 0.7), rot(&b, 0.7)], &o).unwrap();
        assert!((r1.total - r2.total).abs() < 1e-8, "{} {}", r1.total, r2.total);
    }

    fn alternating() -> Staircase {
        Staircase::Alternating {
            arcs: vec![1, 0],
            chunk: 1,
        }
    }

    #[test]
    fn symmetric_pair_is_order_independent() {
        let arcs = [zero_arc(0.0, 1.0, 20), zero_arc(core::f64::consts::PI, 1.0, 20)];
        let fwd = multiradial_potential(&arcs, &MultiRadialOptions::default()).unwrap();
        for staircase in [Staircase::Order(vec![1, 0]), alternating()] {
            let o = MultiRadialOptions {
                staircase,
                ..Default::default()
            };
            let r = multiradial_potential(&arcs, &o).unwrap();
            assert!((fwd.total - r.total).abs() < 1e-4, "{} {}", fwd.total, r.total);
        }
        // Two opposite radii are the geodesic pair.
        assert!(fwd.total.abs() < 1e-4, "{}", fwd.total);
    }

    #[test]
    fn printed_form_depends_on_the_path() {
        let arcs = [zero_arc(0.0, 0.6, 20), zero_arc(core::f64::consts::PI, 0.6, 20)];
        let run = |form, staircase| {
            multiradial_potential(
                &arcs,
                &MultiRadialOptions {
                    form,
                    staircase,
                    mu: 0.0,
                },
            )
            .unwrap()
            .total
        };
        let sq = (run(LoopTermForm::Squared, Staircase::IndexOrder) - run(LoopTermForm::Squared, alternating())).abs();
        let pr = (run(LoopTermForm::Printed, Staircase::IndexOrder) - run(LoopTermForm::Printed, alternating())).abs();
        assert!(sq < 1e-5 && pr > 1e-4, "{sq} {pr}");
    }

    #[test]
    fn asymmetric_pair_is_path_independent() {
        let a = DrivingFunction::from_fn(DrivingKind::Radial, 0.4, 24, |t| 0.4 * t).unwrap();
        let b = DrivingFunction::from_fn(DrivingKind::Radial, 0.3, 18, |t| 2.5 - 0.3 * t).unwrap();
        let r1 = multiradial_potential(&[a.clone(), b.clone()], &MultiRadialOptions::default()).unwrap();
        let r2 = multiradial_potential(
            &[a, b],
            &MultiRadialOptions {
                staircase: Staircase::Alternating {
                    arcs: vec![1, 0],
                    chunk: 3,
                },
                ..Default::default()
            },
        )
        .unwrap();
        assert!((r1.total - r2.total).abs() < 1e-4, "{} {}", r1.total, r2.total);
    }

    #[test]
    fn staircase_rejects_bad_orders() {
        assert!(Staircase::Order(vec![0, 0]).moves(&[3, 3]).is_err());
        assert!(Staircase::Alternating { arcs: vec![0, 1], chunk: 0 }.moves(&[3, 3]).is_err());
        let m = Staircase::Alternating { arcs: vec![1, 0], chunk: 2 }.moves(&[3, 1]).unwrap();
        assert_eq!(m, vec![(1, 1), (0, 2), (0, 1)]);
    }
}
