//! SLE(kappa) and SLE(kappa, rho) driving functions and stay probabilities.
//!
//! Driving increments are `sqrt(kappa) dB` plus, for `rho != 0`, the drift
//! integrated over the step by [`drift_increment`]. The step is implicit: the
//! drift depends on the unknown endpoint through the force point, and the
//! scalar equation is solved by a safeguarded secant iteration.

use alloc::vec::Vec;

use crate::conformal::{region_contains, Chart, CurvePath, ExtPoint, MapChain, Marked, Region};
use crate::energies::chord_normalizer;
use crate::estimate::{fold_indexed, Accumulator, Mergeable};
use crate::loewner::{chordal_trace, drift_increment, force_step, radial_trace, DrivingFunction, DrivingKind, ForcePoint, TraceOptions};
use crate::rng::{normal, StreamKey};
use crate::{Error, Estimate, Result, C64};
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

/// Distance to the force point below which a step is subdivided.
pub const FORCE_EPS: f64 = 1e-6;
/// Number of substeps used near the force point.
pub const SUBDIVISION: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SwallowPolicy {
    /// Redraw the whole path from a fresh stream, up to `max_attempts` times.
    Reject { max_attempts: u32 },
    /// Reflect the Brownian increment of a step that ends within `eps` of
    /// the force point.
    Reflect { eps: f64 },
}

impl Default for SwallowPolicy {
    fn default() -> Self {
        SwallowPolicy::Reject { max_attempts: 16 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SleConfig {
    pub kind: DrivingKind,
    pub kappa: f64,
    pub rho: f64,
    pub force: ForcePoint,
    pub start: f64,
    pub grid: Vec<f64>,
    pub policy: SwallowPolicy,
}

impl SleConfig {
    pub fn new(kind: DrivingKind, kappa: f64, horizon: f64, steps: usize) -> Self {
        SleConfig {
            kind,
            kappa,
            rho: 0.0,
            force: ForcePoint::Start,
            start: 0.0,
            grid: DrivingFunction::uniform_grid(horizon, steps),
            policy: SwallowPolicy::default(),
        }
    }

    pub fn chordal(kappa: f64, horizon: f64, steps: usize) -> Self {
        Self::new(DrivingKind::Chordal, kappa, horizon, steps)
    }

    pub fn radial(kappa: f64, horizon: f64, steps: usize) -> Self {
        Self::new(DrivingKind::Radial, kappa, horizon, steps)
    }

    pub fn with_rho(mut self, rho: f64, force: ForcePoint) -> Self {
        self.rho = rho;
        self.force = force;
        self
    }

    pub fn with_start(mut self, start: f64) -> Self {
        self.start = start;
        self
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_policy(mut self, policy: SwallowPolicy) -> Self {
        self.policy = policy;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(Error::invalid("kappa must be finite and non-negative"));
        }
        if !(self.rho > -2.0) || !self.rho.is_finite() {
            return Err(Error::invalid("rho must exceed -2"));
        }
        if self.grid.len() < 2 || self.grid[0] != 0.0 || self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("sampling grid must start at 0 and increase"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlePath {
    pub driving: DrivingFunction,
    /// Force-point track on the grid (`None` when `rho == 0`).
    pub force: Option<Vec<f64>>,
    /// Number of full redraws (reject policy).
    pub attempts: u32,
    pub reflections: u32,
    pub subdivided: u32,
}

struct StepOutcome {
    w1: f64,
    v1: f64,
}

/// Solves `a = noise + drift(W0 + a)` for the increment `a`.
fn implicit_step(kind: DrivingKind, rho: f64, t0: f64, dt: f64, w0: f64, v0: f64, noise: f64) -> Result<StepOutcome> {
    let d0 = w0 - v0;
    let eval = |a: f64| -> Result<(f64, f64)> {
        let v1 = force_step(kind, t0, dt, w0, w0 + a, v0)?;
        let dr = drift_increment(kind, rho, dt, d0, w0 + a - v1);
        Ok((a - noise - dr, v1))
    };
    let scale = dt.sqrt();
    let guess = if d0 != 0.0 {
        noise + drift_increment(kind, rho, dt, d0, d0)
    } else {
        noise - rho * scale * d0.signum().max(1.0)
    };
    let mut a0 = guess;
    let mut a1 = guess + 1e-3 * scale;
    let (mut f0, _) = eval(a0)?;
    let (mut f1, mut v1) = eval(a1)?;
    for _ in 0..100 {
        if f1.abs() <= 1e-15 * (scale + a1.abs()) {
            return Ok(StepOutcome { w1: w0 + a1, v1 });
        }
        let den = f1 - f0;
        let next = if den != 0.0 { a1 - f1 * (a1 - a0) / den } else { a1 + 1e-3 * scale };
        // The residual has slope at least 1, so a step larger than |f| is
        // never needed.
        let next = next.clamp(a1 - 2.0 * f1.abs(), a1 + 2.0 * f1.abs());
        a0 = a1;
        f0 = f1;
        a1 = next;
        let r = eval(a1)?;
        f1 = r.0;
        v1 = r.1;
    }
    if f1.abs() <= 1e-11 * (scale + a1.abs()) {
        Ok(StepOutcome { w1: w0 + a1, v1 })
    } else {
        Err(Error::NoConvergence { what: "implicit SLE step" })
    }
}

/// Step with `SUBDIVISION` substeps carrying the same total noise.
fn subdivided_step(
    kind: DrivingKind,
    rho: f64,
    kappa: f64,
    t0: f64,
    dt: f64,
    w0: f64,
    v0: f64,
    noise: f64,
    extra: &mut rand_chacha::ChaCha8Rng,
) -> Result<StepOutcome> {
    let h = dt / SUBDIVISION as f64;
    let xi: Vec<f64> = (0..SUBDIVISION).map(|_| normal(extra)).collect();
    let mean = xi.iter().sum::<f64>() / SUBDIVISION as f64;
    let (mut w, mut v) = (w0, v0);
    for (k, x) in xi.iter().enumerate() {
        let n = noise / SUBDIVISION as f64 + (kappa * h).sqrt() * (x - mean);
        let s = implicit_step(kind, rho, t0 + k as f64 * h, h, w, v, n)?;
        w = s.w1;
        v = s.v1;
    }
    Ok(StepOutcome { w1: w, v1: v })
}

fn sample_attempt(cfg: &SleConfig, key: &StreamKey, index: u64) -> Result<SlePath> {
    let mut rng = key.rng(index);
    let n = cfg.grid.len() - 1;
    let mut values = Vec::with_capacity(n + 1);
    values.push(cfg.start);
    let sk = cfg.kappa.sqrt();
    if cfg.rho == 0.0 {
        let mut w = cfg.start;
        for k in 0..n {
            let dt = cfg.grid[k + 1] - cfg.grid[k];
            w += sk * dt.sqrt() * normal(&mut rng);
            values.push(w);
        }
        return Ok(SlePath {
            driving: DrivingFunction::new(cfg.kind, cfg.grid.clone(), values)?,
            force: None,
            attempts: 0,
            reflections: 0,
            subdivided: 0,
        });
    }
    let mut extra = key.child("subdivide").rng(index);
    let mut force = Vec::with_capacity(n + 1);
    let (mut w, mut v) = (cfg.start, cfg.force.initial(cfg.start));
    force.push(v);
    let (mut reflections, mut subdivided) = (0, 0);
    for k in 0..n {
        let (t0, dt) = (cfg.grid[k], cfg.grid[k + 1] - cfg.grid[k]);
        let noise = sk * dt.sqrt() * normal(&mut rng);
        let near = w != v && (w - v).abs() < FORCE_EPS;
        let mut step = if near {
            subdivided += 1;
            subdivided_step(cfg.kind, cfg.rho, cfg.kappa, t0, dt, w, v, noise, &mut extra)
        } else {
            implicit_step(cfg.kind, cfg.rho, t0, dt, w, v, noise)
        };
        if !near && matches!(step, Err(Error::ForcePointSwallowed { .. })) {
            subdivided += 1;
            step = subdivided_step(cfg.kind, cfg.rho, cfg.kappa, t0, dt, w, v, noise, &mut extra);
        }
        if let SwallowPolicy::Reflect { eps } = cfg.policy {
            let close = match &step {
                Ok(s) => (s.w1 - s.v1).abs() < eps,
                Err(Error::ForcePointSwallowed { .. }) => true,
                Err(_) => false,
            };
            if close {
                reflections += 1;
                step = implicit_step(cfg.kind, cfg.rho, t0, dt, w, v, -noise);
            }
        }
        let s = step?;
        w = s.w1;
        v = s.v1;
        values.push(w);
        force.push(v);
    }
    Ok(SlePath {
        driving: DrivingFunction::new(cfg.kind, cfg.grid.clone(), values)?,
        force: Some(force),
        attempts: 0,
        reflections,
        subdivided,
    })
}

/// Path `index` of the stream `key`.
pub fn sample_driving(cfg: &SleConfig, key: &StreamKey, index: u64) -> Result<SlePath> {
    cfg.validate()?;
    let mut attempt = 0u32;
    loop {
        let k = if attempt == 0 { *key } else { key.child_indexed("redraw", attempt as u64) };
        match sample_attempt(cfg, &k, index) {
            Ok(mut p) => {
                p.attempts = attempt;
                return Ok(p);
            }
            Err(Error::ForcePointSwallowed { time }) => match cfg.policy {
                SwallowPolicy::Reject { max_attempts } if attempt + 1 < max_attempts => attempt += 1,
                _ => return Err(Error::ForcePointSwallowed { time }),
            },
            Err(e) => return Err(e),
        }
    }
}

/// Stream used by [`sample_paths`] and [`estimate_stay_probability`].
pub fn path_stream(seed: u64) -> StreamKey {
    StreamKey::root(seed).child("sle")
}

pub fn sample_paths(cfg: &SleConfig, seed: u64, n: usize) -> Result<Vec<SlePath>> {
    let key = path_stream(seed);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n as u64).into_par_iter().map(|i| sample_driving(cfg, &key, i)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n as u64).map(|i| sample_driving(cfg, &key, i)).collect()
    }
}

/// Where sampled traces are compared against a region.
#[derive(Clone, Debug, PartialEq)]
pub struct StayQuery<'a> {
    pub region: &'a Region,
    /// Maps the trace chart (`H` for chordal, `D` for radial) into the
    /// region's chart.
    pub map: MapChain,
    /// Marked points of the configuration in the region's chart.
    pub marked: Vec<C64>,
    pub clearance: f64,
    pub marked_tol: f64,
}

impl<'a> StayQuery<'a> {
    /// Chordal traces in `(D; x, y)` seen through the Mobius map `H -> D`
    /// sending 0 to `x` and infinity to `y`.
    pub fn chordal_disk(region: &'a Region, x: C64, y: C64, clearance: f64) -> Result<Self> {
        let map = chord_normalizer(Chart::D, ExtPoint::Finite(x), ExtPoint::Finite(y))?.inverse();
        Ok(StayQuery {
            region,
            map,
            marked: alloc::vec![x, y],
            clearance,
            marked_tol: 1e-9,
        })
    }

    /// Radial traces in `(D; x, 0)` with no chart change.
    pub fn radial_disk(region: &'a Region, x: C64, clearance: f64) -> Self {
        StayQuery {
            region,
            map: MapChain::identity(),
            marked: alloc::vec![x, C64::new(0.0, 0.0)],
            clearance,
            marked_tol: 1e-9,
        }
    }

    fn check(&self) -> Result<()> {
        for &m in &self.marked {
            let inward = if m.norm() > 0.0 { m * (1.0 - 1e-6) } else { m };
            if !self.region.contains(inward) && !self.region.contains(m) {
                return Err(Error::invalid("region must contain the marked points"));
            }
        }
        Ok(())
    }

    /// Whether the trace of `d` stays in the region.
    pub fn stays(&self, d: &DrivingFunction) -> Result<bool> {
        let tr = match d.kind {
            DrivingKind::Chordal => chordal_trace(d, &TraceOptions::default())?,
            DrivingKind::Radial => radial_trace(d)?,
        };
        let mut c = tr.curve.map(&self.map, self.region.chart)?;
        c.marked = Marked {
            start: self.marked.first().map(|z| ExtPoint::Finite(*z)),
            end: self.marked.get(1).map(|z| ExtPoint::Finite(*z)),
            target: None,
        };
        region_contains(self.region, &c, self.clearance, self.marked_tol)
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct StayAcc {
    hits: u64,
    n: u64,
    failures: u64,
}

impl Mergeable for StayAcc {
    fn merge_from(&mut self, o: &Self) {
        self.hits += o.hits;
        self.n += o.n;
        self.failures += o.failures;
    }
}

/// Fraction of traces staying in the region, with binomial standard error.
/// Paths whose sampling fails count as leaving the region.
pub fn estimate_stay_probability(cfg: &SleConfig, q: &StayQuery, samples: u64, seed: u64) -> Result<Estimate> {
    cfg.validate()?;
    q.check()?;
    if q.region.is_domain() && q.clearance == 0.0 {
        let mut e = Estimate::exact(1.0);
        e.n_samples = samples;
        e.seed = Some(seed);
        return Ok(e);
    }
    let key = path_stream(seed);
    let acc = fold_indexed(samples, StayAcc::default, |i, a: &mut StayAcc| {
        a.n += 1;
        match sample_driving(cfg, &key, i).and_then(|p| q.stays(&p.driving)) {
            Ok(true) => a.hits += 1,
            Ok(false) => {}
            Err(_) => a.failures += 1,
        }
    });
    let n = acc.n.max(1) as f64;
    let p = acc.hits as f64 / n;
    Ok(Estimate {
        mean: p,
        stderr: (p * (1.0 - p) / n).sqrt(),
        n_samples: acc.n,
        seed: Some(seed),
        window: None,
    })
}

/// Mean and standard error of `W_T` and `W_T^2` over `n` paths.
pub fn terminal_moments(cfg: &SleConfig, seed: u64, n: u64) -> Result<(Estimate, Estimate)> {
    cfg.validate()?;
    let key = path_stream(seed);
    let acc = fold_indexed(
        n,
        || (Accumulator::new(), Accumulator::new(), 0u64),
        |i, a: &mut (Accumulator, Accumulator, u64)| match sample_driving(cfg, &key, i) {
            Ok(p) => {
                let w = p.driving.values.last().unwrap() - cfg.start;
                a.0.push(w);
                a.1.push(w * w);
            }
            Err(_) => a.2 += 1,
        },
    );
    if acc.2 > 0 {
        return Err(Error::invalid("some paths could not be sampled"));
    }
    Ok((acc.0.estimate(), acc.1.estimate()))
}

impl Mergeable for (Accumulator, Accumulator, u64) {
    fn merge_from(&mut self, o: &Self) {
        self.0.merge(&o.0);
        self.1.merge(&o.1);
        self.2 += o.2;
    }
}

/// Trace of a sampled path in its canonical chart.
pub fn trace(path: &SlePath) -> Result<CurvePath> {
    Ok(match path.driving.kind {
        DrivingKind::Chordal => chordal_trace(&path.driving, &TraceOptions::default())?.curve,
        DrivingKind::Radial => radial_trace(&path.driving)?.curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energies::{forced_energy, forced_residuals};

    #[test]
    fn zero_kappa_gives_zero_driver() {
        let cfg = SleConfig::chordal(0.0, 1.0, 50);
        let p = sample_driving(&cfg, &path_stream(1), 0).unwrap();
        assert!(p.driving.values.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn rho_zero_is_bitwise_plain() {
        let plain = SleConfig::chordal(2.0, 1.0, 64);
        let forced = plain.clone().with_rho(0.0, ForcePoint::At(0.5));
        for i in 0..5 {
            let a = sample_driving(&plain, &path_stream(9), i).unwrap();
            let b = sample_driving(&forced, &path_stream(9), i).unwrap();
            assert_eq!(a.driving.values, b.driving.values);
        }
    }

    #[test]
    fn deterministic_forced_paths_have_zero_action() {
        for kind in [DrivingKind::Chordal, DrivingKind::Radial] {
            let cfg = SleConfig::new(kind, 0.0, 0.5, 40).with_rho(1.5, ForcePoint::Start);
            let p = sample_driving(&cfg, &path_stream(0), 0).unwrap();
            let v = p.force.as_ref().unwrap();
            let r = forced_residuals(&p.driving, 1.5, v);
            assert!(r.iter().all(|x| x.abs() < 1e-12), "{kind:?} {r:?}");
            let e = forced_energy(&p.driving, 1.5, ForcePoint::Start).unwrap();
            assert!(e < 1e-18, "{kind:?} {e}");
            assert!(p.driving.values[40] != 0.0);
        }
    }

    #[test]
    fn self_similar_forced_chordal() {
        // With W0 = V0 the kappa = 0 flow is W = -rho sqrt(2t / (rho + 2)).
        let rho = 2.0;
        let cfg = SleConfig::chordal(0.0, 1.0, 200).with_rho(rho, ForcePoint::Start);
        let p = sample_driving(&cfg, &path_stream(0), 0).unwrap();
        let exact = -rho * (2.0 / (rho + 2.0)).sqrt();
        assert!((p.driving.values[200] - exact).abs() < 1e-2, "{}", p.driving.values[200]);
    }

    #[test]
    fn full_domain_stays_with_probability_one() {
        let cfg = SleConfig::chordal(2.0, 1.0, 20);
        let d = Region::domain(Chart::D);
        let q = StayQuery::chordal_disk(&d, C64::new(-1.0, 0.0), C64::new(1.0, 0.0), 0.0).unwrap();
        let e = estimate_stay_probability(&cfg, &q, 100, 0).unwrap();
        assert_eq!(e.mean, 1.0);
    }

    #[test]
    fn region_missing_marked_points_is_rejected() {
        let cfg = SleConfig::chordal(2.0, 1.0, 20);
        let r = Region::radial_keyhole(0.2, 100).unwrap();
        let q = StayQuery::chordal_disk(&r, C64::new(-1.0, 0.0), C64::new(1.0, 0.0), 0.0).unwrap();
        assert!(estimate_stay_probability(&cfg, &q, 10, 0).is_err());
    }

    #[test]
    fn nested_lenses_are_monotone() {
        let cfg = SleConfig::chordal(2.0, 4.0, 40);
        let wide = Region::chordal_lens(0.9, 400).unwrap();
        let thin = Region::chordal_lens(0.5, 400).unwrap();
        let (x, y) = (C64::new(-1.0, 0.0), C64::new(1.0, 0.0));
        let a = estimate_stay_probability(&cfg, &StayQuery::chordal_disk(&wide, x, y, 0.0).unwrap(), 400, 5).unwrap();
        let b = estimate_stay_probability(&cfg, &StayQuery::chordal_disk(&thin, x, y, 0.0).unwrap(), 400, 5).unwrap();
        assert!(a.mean >= b.mean && b.mean > 0.0, "{a:?} {b:?}");
    }
}
