//! Brownian loop masses by Monte Carlo.
//!
//! Loops are drawn from the loop measure `dA(z) dt / (2 pi t^2)` times the
//! Brownian bridge law, restricted to durations `t >= t_min`. The duration
//! has density `t_min / t^2`; the root is uniform on the part of the root box
//! within `8 sqrt(t)` of the anchor sets (roots farther away cannot produce a
//! hit at that duration except with Gaussian-tail probability), and each loop
//! carries the Radon-Nikodym weight `|B(t)| / (2 pi t_min)`.
//!
//! A bridge is discretized at `m` points. Between consecutive points the
//! probability of touching a set (or leaving the domain) is the bridge
//! barrier probability `exp(-2 a b / dt)` with `a, b` the endpoint distances,
//! and the per-segment events are combined as independent, which they are
//! given the skeleton up to the local straightening of the boundary.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::conformal::{cayley, CayleyDirection, Chart, CurvePath, ExtPoint, Region, SegmentGrid};
use crate::estimate::{fold_indexed, MultiAccumulator, Window};
use crate::rng::{normal, uniform, StreamKey};
use crate::{Error, Estimate, Result, C64};
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

pub const DEFAULT_BRIDGE_POINTS: usize = 256;
const PREFILTER_SIGMAS: f64 = 8.0;
const BARRIER_SIGMAS: f64 = 6.0;

/// A compact set a loop may hit.
#[derive(Clone, Debug)]
pub enum LoopSet {
    /// A polyline.
    Curve(SegmentGrid),
    /// The complement of a region inside the disk.
    Outside(Region),
}

impl LoopSet {
    /// Polyline set; curves in the half-plane are moved to the disk by the
    /// Cayley chart, which preserves loop masses.
    pub fn curve(c: &CurvePath) -> Result<Self> {
        let pts = to_disk(c)?;
        Ok(LoopSet::Curve(SegmentGrid::from_polyline(&pts)))
    }

    pub fn curves(cs: &[CurvePath]) -> Result<Self> {
        let lines = cs.iter().map(to_disk).collect::<Result<Vec<_>>>()?;
        Ok(LoopSet::Curve(SegmentGrid::from_polylines(lines.iter().map(|l| l.as_slice()))))
    }

    /// `D \ region`.
    pub fn outside(region: &Region) -> Result<Self> {
        if region.chart != Chart::D {
            return Err(Error::invalid("loop masses are computed in the disk chart"));
        }
        Ok(LoopSet::Outside(region.clone()))
    }

    /// Distance from `z` to the set, exact below `cap`; zero on the set.
    pub fn distance(&self, z: C64, cap: f64) -> f64 {
        match self {
            LoopSet::Curve(g) => g.distance(z, cap),
            LoopSet::Outside(r) => {
                if r.contains(z) {
                    r.exit_distance(z, cap)
                } else {
                    0.0
                }
            }
        }
    }

    fn bbox(&self) -> Option<[f64; 4]> {
        match self {
            LoopSet::Curve(g) if !g.is_empty() => Some(g.bbox),
            _ => None,
        }
    }

    fn is_curve(&self) -> bool {
        matches!(self, LoopSet::Curve(_))
    }
}

fn to_disk(c: &CurvePath) -> Result<Vec<C64>> {
    match c.chart {
        Chart::D => Ok(c.points.clone()),
        Chart::H => c
            .points
            .iter()
            .map(|&z| match cayley(ExtPoint::Finite(z), CayleyDirection::HalfPlaneToDisk)? {
                ExtPoint::Finite(w) => Ok(w),
                ExtPoint::Infinity => Err(Error::invalid("curve point maps to infinity")),
            })
            .collect(),
    }
}

/// Distance between two sets; zero when they meet.
pub fn separation(a: &LoopSet, b: &LoopSet) -> Result<f64> {
    match (a, b) {
        (LoopSet::Curve(ga), LoopSet::Curve(gb)) => Ok(grid_distance(ga, gb).min(grid_distance(gb, ga))),
        (LoopSet::Curve(g), LoopSet::Outside(r)) | (LoopSet::Outside(r), LoopSet::Curve(g)) => {
            let mut d = f64::INFINITY;
            let wall = r.interior_boundary();
            for &(p, q) in &g.segs {
                if !r.contains(p) || !r.contains(q) || wall.crosses(p, q) {
                    return Ok(0.0);
                }
                d = d.min(r.exit_distance(p, f64::INFINITY)).min(r.exit_distance(q, f64::INFINITY));
            }
            if !wall.is_empty() {
                for &(p, q) in &wall.segs {
                    d = d.min(g.distance(p, f64::INFINITY)).min(g.distance(q, f64::INFINITY));
                }
            }
            Ok(d)
        }
        (LoopSet::Outside(_), LoopSet::Outside(_)) => {
            Err(Error::invalid("at least one of two loop sets must be a curve"))
        }
    }
}

fn grid_distance(a: &SegmentGrid, b: &SegmentGrid) -> f64 {
    let mut d = f64::INFINITY;
    for &(p, q) in &a.segs {
        if b.crosses(p, q) {
            return 0.0;
        }
        d = d.min(b.distance(p, f64::INFINITY)).min(b.distance(q, f64::INFINITY));
    }
    d
}

/// Signed clearance of `z` in the domain: negative outside.
#[inline]
fn inside_distance(d: &Region, z: C64, cap: f64) -> f64 {
    if !d.contains(z) {
        return -1.0;
    }
    d.chart.boundary_distance(z).min(d.exit_distance(z, cap))
}

fn region_box(d: &Region) -> [f64; 4] {
    let mut b = [-1.0, 1.0, -1.0, 1.0];
    if !d.is_domain() && !d.arcs.is_empty() {
        let mut r = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for a in &d.arcs {
            for p in &a.points {
                r[0] = r[0].min(p.re);
                r[1] = r[1].max(p.re);
                r[2] = r[2].min(p.im);
                r[3] = r[3].max(p.im);
            }
        }
        b = intersect(b, r);
    }
    b
}

#[inline]
fn intersect(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [a[0].max(b[0]), a[1].min(b[1]), a[2].max(b[2]), a[3].min(b[3])]
}

#[inline]
fn union(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [a[0].min(b[0]), a[1].max(b[1]), a[2].min(b[2]), a[3].max(b[3])]
}

#[inline]
fn area(b: &[f64; 4]) -> f64 {
    (b[1] - b[0]).max(0.0) * (b[3] - b[2]).max(0.0)
}

/// A weighted loop: `path` starts and ends at `root`.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopSample {
    pub root: C64,
    pub duration: f64,
    pub path: Vec<C64>,
    pub weight: f64,
}

/// Fills `out` with a Brownian bridge of duration `t` from `root` at `m`
/// steps (`m + 1` points, the last equal to the first).
pub fn fill_bridge(rng: &mut ChaCha8Rng, root: C64, t: f64, m: usize, out: &mut Vec<C64>) {
    out.clear();
    let s = (t / m as f64).sqrt();
    let mut acc = C64::new(0.0, 0.0);
    out.push(acc);
    for _ in 0..m {
        acc += C64::new(normal(rng), normal(rng)) * s;
        out.push(acc);
    }
    let end = acc;
    for (k, p) in out.iter_mut().enumerate() {
        *p = root + *p - end * (k as f64 / m as f64);
    }
    out[m] = root;
}

/// Draws duration and root; `None` when the root window is empty.
fn draw_root(
    rng: &mut ChaCha8Rng,
    t_min: f64,
    root_box: &[f64; 4],
    anchor: Option<&[f64; 4]>,
) -> (f64, Option<(C64, f64)>) {
    let t = t_min / uniform(rng);
    let b = match anchor {
        Some(a) => {
            let r = PREFILTER_SIGMAS * t.sqrt();
            intersect(*root_box, [a[0] - r, a[1] + r, a[2] - r, a[3] + r])
        }
        None => *root_box,
    };
    let ux = uniform(rng);
    let uy = uniform(rng);
    let ar = area(&b);
    if !(ar > 0.0) {
        return (t, None);
    }
    let root = C64::new(b[0] + (b[1] - b[0]) * ux, b[2] + (b[3] - b[2]) * uy);
    (t, Some((root, ar / (2.0 * core::f64::consts::PI * t_min))))
}

/// Loop number `index` of stream `key` from the windowed loop measure with
/// uniform roots on `root_box`.
pub fn sample_loop(key: &StreamKey, index: u64, root_box: [f64; 4], t_min: f64, m: usize) -> Result<LoopSample> {
    if !(t_min > 0.0) || !(area(&root_box) > 0.0) || m < 2 {
        return Err(Error::invalid("degenerate loop window"));
    }
    let mut rng = key.rng(index);
    let (t, rw) = draw_root(&mut rng, t_min, &root_box, None);
    let (root, weight) = rw.expect("non-empty box");
    let mut path = Vec::with_capacity(m + 1);
    fill_bridge(&mut rng, root, t, m, &mut path);
    Ok(LoopSample {
        root,
        duration: t,
        path,
        weight,
    })
}

/// Functional of the hit pattern of one loop.
#[derive(Clone, Debug, PartialEq)]
pub enum Functional {
    /// Loops hitting every listed set.
    AllHit(Vec<usize>),
    /// `max(#sets hit - 1, 0)`.
    MultiCross(Vec<usize>),
}

impl Functional {
    fn sets(&self) -> &[usize] {
        match self {
            Functional::AllHit(s) | Functional::MultiCross(s) => s,
        }
    }
}

/// Mass of loops staying in every listed domain, weighted by `functional`.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopQuery {
    pub domains: Vec<usize>,
    pub functional: Functional,
}

/// Several loop-mass functionals evaluated on one shared loop sample, so
/// that differences get paired standard errors.
#[derive(Clone, Debug)]
pub struct LoopProblem<'a> {
    pub domains: Vec<&'a Region>,
    pub sets: Vec<&'a LoopSet>,
    pub queries: Vec<LoopQuery>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopParams {
    pub samples: u64,
    pub seed: u64,
    /// Stream label; runs with equal seed and label see the same loops.
    pub stream: String,
    pub bridge_points: usize,
    /// Overrides the default `(d / 8)^2`.
    pub t_min: Option<f64>,
}

impl Default for LoopParams {
    fn default() -> Self {
        LoopParams {
            samples: 100_000,
            seed: 0,
            stream: String::from("loops"),
            bridge_points: DEFAULT_BRIDGE_POINTS,
            t_min: None,
        }
    }
}

impl LoopParams {
    pub fn new(samples: u64, seed: u64) -> Self {
        LoopParams {
            samples,
            seed,
            ..Default::default()
        }
    }

    pub fn with_stream(mut self, s: &str) -> Self {
        self.stream = String::from(s);
        self
    }

    pub fn with_t_min(mut self, t: f64) -> Self {
        self.t_min = Some(t);
        self
    }

    pub fn with_bridge_points(mut self, m: usize) -> Self {
        self.bridge_points = m;
        self
    }
}

/// Output of [`run`]: one column per query.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopRun {
    pub acc: MultiAccumulator,
    pub window: Window,
    pub seed: u64,
    /// Smallest distance between sets that must both be hit.
    pub separation: f64,
}

impl LoopRun {
    pub fn estimate(&self, q: usize) -> Estimate {
        self.decorate(self.acc.estimate(q))
    }

    /// Paired estimate of `sum_q c_q B_q`.
    pub fn combination(&self, c: &[f64]) -> Estimate {
        self.decorate(self.acc.combination(c))
    }

    fn decorate(&self, mut e: Estimate) -> Estimate {
        e.seed = Some(self.seed);
        e.window = Some(self.window);
        e
    }
}

/// Upper bound on the mass of loops of duration below `t_min` that reach
/// two sets at distance `d`, for roots in a box of area `box_area`.
///
/// A bridge of duration `t` reaching distance `d / 2` from its root has
/// `P <= 4 exp(-d^2 / (4 t))`; integrating against `dt / (2 pi t^2)` gives
/// `(16 / d^2) exp(-d^2 / (4 t_min)) / (2 pi)` per unit area.
pub fn truncation_bias_bound(box_area: f64, d: f64, t_min: f64) -> f64 {
    if !(d > 0.0) {
        return f64::INFINITY;
    }
    box_area / (2.0 * core::f64::consts::PI) * 16.0 / (d * d) * (-d * d / (4.0 * t_min)).exp()
}

struct Plan {
    active: Vec<bool>,
    t_min: f64,
    root_box: [f64; 4],
    anchor: Option<[f64; 4]>,
    separation: f64,
}

fn plan(p: &LoopProblem<'_>, params: &LoopParams) -> Result<Plan> {
    for d in &p.domains {
        if d.chart != Chart::D {
            return Err(Error::invalid("loop domains must be given in the disk chart"));
        }
    }
    let mut active = vec![false; p.queries.len()];
    let mut sep = f64::INFINITY;
    let mut root_box: Option<[f64; 4]> = None;
    let mut anchor: Option<[f64; 4]> = None;
    let mut anchored = true;
    for (qi, q) in p.queries.iter().enumerate() {
        let sets = q.functional.sets();
        if q.domains.is_empty() || q.domains.iter().any(|&d| d >= p.domains.len()) {
            return Err(Error::invalid("loop query needs valid domain indices"));
        }
        if sets.iter().any(|&s| s >= p.sets.len()) {
            return Err(Error::invalid("loop query refers to a missing set"));
        }
        let needs_pair = matches!(q.functional, Functional::MultiCross(_)) || sets.len() >= 2;
        if sets.is_empty() || (matches!(q.functional, Functional::MultiCross(_)) && sets.len() < 2) {
            continue;
        }
        let mut qsep = f64::INFINITY;
        for a in 0..sets.len() {
            for b in a + 1..sets.len() {
                let d = separation(p.sets[sets[a]], p.sets[sets[b]])?;
                if !(d > 0.0) {
                    return Err(Error::NotDisjoint);
                }
                qsep = qsep.min(d);
            }
        }
        let mut qbox = [-1.0, 1.0, -1.0, 1.0];
        for &d in &q.domains {
            qbox = intersect(qbox, region_box(p.domains[d]));
        }
        let diam = (qbox[1] - qbox[0]).max(0.0).hypot((qbox[3] - qbox[2]).max(0.0));
        if !(area(&qbox) > 0.0) || (needs_pair && qsep >= diam) {
            continue;
        }
        active[qi] = true;
        if needs_pair {
            sep = sep.min(qsep);
        }
        root_box = Some(root_box.map_or(qbox, |b| union(b, qbox)));
        let curves = sets.iter().filter(|&&s| p.sets[s].is_curve()).count();
        let ok = match q.functional {
            Functional::AllHit(_) => curves >= 1,
            Functional::MultiCross(_) => curves + 1 >= sets.len(),
        };
        if !ok {
            anchored = false;
        }
        for &s in sets {
            if let Some(b) = p.sets[s].bbox() {
                anchor = Some(anchor.map_or(b, |a| union(a, b)));
            }
        }
    }
    let t_min = match params.t_min {
        Some(t) => t,
        None if sep.is_finite() => (sep / 8.0) * (sep / 8.0),
        None if active.iter().any(|&a| a) => {
            return Err(Error::invalid("single-set loop masses need an explicit t_min"))
        }
        None => f64::NAN,
    };
    if active.iter().any(|&a| a) && !(t_min > 0.0 && t_min.is_finite()) {
        return Err(Error::invalid("degenerate loop window: t_min must be positive"));
    }
    Ok(Plan {
        active,
        t_min,
        root_box: root_box.unwrap_or([0.0; 4]),
        anchor: if anchored { anchor } else { None },
        separation: sep,
    })
}

/// Probability that the discretized bridge touches the set (`dist`), from
/// the per-segment barrier probabilities.
#[inline]
fn hit_probability(path: &[C64], dt: f64, cap: f64, dist: impl Fn(C64, f64) -> f64, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    for &z in path {
        let d = dist(z, cap);
        if d <= 0.0 {
            return 1.0;
        }
        buf.push(d);
    }
    let mut log_miss = 0.0;
    for w in buf.windows(2) {
        let p = (-2.0 * w[0] * w[1] / dt).exp();
        log_miss += (-p).ln_1p();
    }
    -log_miss.exp_m1()
}

#[inline]
fn stay_probability(path: &[C64], dt: f64, cap: f64, d: &Region, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    for &z in path {
        let e = inside_distance(d, z, cap);
        if e <= 0.0 {
            return 0.0;
        }
        buf.push(e);
    }
    let mut log_stay = 0.0;
    for w in buf.windows(2) {
        let q = (-2.0 * w[0] * w[1] / dt).exp();
        log_stay += (-q).ln_1p();
    }
    log_stay.exp()
}

/// Expected `max(N - 1, 0)` for `N` a sum of independent Bernoulli(`h_j`).
fn excess_hits(h: &[f64]) -> f64 {
    let mut dist = vec![0.0; h.len() + 1];
    dist[0] = 1.0;
    for (j, &p) in h.iter().enumerate() {
        for k in (0..=j + 1).rev() {
            let stay = dist[k] * (1.0 - p);
            let up = if k > 0 { dist[k - 1] * p } else { 0.0 };
            dist[k] = if k == j + 1 { up } else { stay + up };
        }
    }
    dist.iter().enumerate().skip(2).map(|(k, &q)| (k - 1) as f64 * q).sum()
}

/// Evaluates every query of `p` on `params.samples` loops.
pub fn run(p: &LoopProblem<'_>, params: &LoopParams) -> Result<LoopRun> {
    if params.bridge_points < 2 {
        return Err(Error::invalid("bridge needs at least two steps"));
    }
    let plan = plan(p, params)?;
    let k = p.queries.len();
    let key = StreamKey::root(params.seed).child(&params.stream);
    let m = params.bridge_points;
    let window = Window {
        t_min: plan.t_min,
        t_max: f64::INFINITY,
        root_box: plan.root_box,
        bias_bound: if plan.separation.is_finite() {
            truncation_bias_bound(area(&plan.root_box), plan.separation, plan.t_min)
        } else {
            0.0
        },
    };
    if !plan.active.iter().any(|&a| a) {
        let mut acc = MultiAccumulator::new(k);
        let zeros = vec![0.0; k];
        for _ in 0..params.samples {
            acc.push(&zeros);
        }
        return Ok(LoopRun {
            acc,
            window,
            seed: params.seed,
            separation: plan.separation,
        });
    }
    let acc = fold_indexed(
        params.samples,
        || MultiAccumulator::new(k),
        |i, acc| {
            let mut out = vec![0.0; k];
            sample_into(p, &plan, &key, i, m, &mut out);
            acc.push(&out);
        },
    );
    Ok(LoopRun {
        acc,
        window,
        seed: params.seed,
        separation: plan.separation,
    })
}

fn sample_into(p: &LoopProblem<'_>, plan: &Plan, key: &StreamKey, i: u64, m: usize, out: &mut [f64]) {
    let mut rng = key.rng(i);
    let (t, rw) = draw_root(&mut rng, plan.t_min, &plan.root_box, plan.anchor.as_ref());
    let (root, weight) = match rw {
        Some(x) => x,
        None => return,
    };
    let reach = PREFILTER_SIGMAS * t.sqrt();
    let ns = p.sets.len();
    let mut root_dist = vec![f64::INFINITY; ns];
    let mut near = vec![false; ns];
    let mut wanted = vec![false; ns];
    let mut any = false;
    for (qi, q) in p.queries.iter().enumerate() {
        if !plan.active[qi] {
            continue;
        }
        if q.domains.iter().any(|&d| inside_distance(p.domains[d], root, 0.0) < 0.0) {
            continue;
        }
        let sets = q.functional.sets();
        let mut close = 0;
        for &s in sets {
            if root_dist[s].is_infinite() {
                root_dist[s] = p.sets[s].distance(root, reach).min(f64::MAX);
                near[s] = root_dist[s] < reach;
            }
            if near[s] {
                close += 1;
            }
        }
        let possible = match q.functional {
            Functional::AllHit(_) => close == sets.len(),
            Functional::MultiCross(_) => close >= 2,
        };
        if possible {
            any = true;
            for &s in sets {
                wanted[s] |= near[s];
            }
        }
    }
    if !any {
        return;
    }
    let mut path = Vec::with_capacity(m + 1);
    fill_bridge(&mut rng, root, t, m, &mut path);
    let dt = t / m as f64;
    let cap = BARRIER_SIGMAS * dt.sqrt();
    let spread = path.iter().map(|z| (z - root).norm()).fold(0.0, f64::max);
    let mut buf = Vec::with_capacity(m + 1);
    let mut hit = vec![0.0; ns];
    for s in 0..ns {
        if wanted[s] && root_dist[s] <= spread + cap {
            let set = p.sets[s];
            hit[s] = hit_probability(&path, dt, cap, |z, c| set.distance(z, c), &mut buf);
        }
    }
    let mut stay = vec![f64::NAN; p.domains.len()];
    let mut hs = Vec::new();
    for (qi, q) in p.queries.iter().enumerate() {
        if !plan.active[qi] {
            continue;
        }
        let sets = q.functional.sets();
        let value = match &q.functional {
            Functional::AllHit(_) => {
                let mut v = hit[sets[0]];
                for &s in &sets[1..] {
                    v *= hit[s];
                }
                v
            }
            Functional::MultiCross(_) => {
                hs.clear();
                hs.extend(sets.iter().map(|&s| hit[s]));
                excess_hits(&hs)
            }
        };
        if value == 0.0 {
            continue;
        }
        let mut s_all = 1.0;
        for &d in &q.domains {
            if stay[d].is_nan() {
                stay[d] = stay_probability(&path, dt, cap, p.domains[d], &mut buf);
            }
            s_all *= stay[d];
        }
        out[qi] = weight * (s_all * value);
    }
}

/// `B(V1, V2; D)`: mass of loops in `D` hitting both sets.
pub fn loop_mass_two_sets(v1: &LoopSet, v2: &LoopSet, d: &Region, params: &LoopParams) -> Result<Estimate> {
    let problem = LoopProblem {
        domains: vec![d],
        sets: vec![v1, v2],
        queries: vec![LoopQuery {
            domains: vec![0],
            functional: Functional::AllHit(vec![0, 1]),
        }],
    };
    Ok(run(&problem, params)?.estimate(0))
}

/// Mass of loops in `D` weighted by `max(#curves hit - 1, 0)`.
pub fn multi_cross_mass(curves: &[CurvePath], d: &Region, params: &LoopParams) -> Result<Estimate> {
    let sets = curves.iter().map(LoopSet::curve).collect::<Result<Vec<_>>>()?;
    for a in 0..sets.len() {
        for b in a + 1..sets.len() {
            if !(separation(&sets[a], &sets[b])? > 0.0) {
                return Err(Error::NotDisjoint);
            }
        }
    }
    if sets.len() < 2 {
        return Ok(Estimate::exact(0.0));
    }
    let problem = LoopProblem {
        domains: vec![d],
        sets: sets.iter().collect(),
        queries: vec![LoopQuery {
            domains: vec![0],
            functional: Functional::MultiCross((0..sets.len()).collect()),
        }],
    };
    Ok(run(&problem, params)?.estimate(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::hyperbolic_geodesic;

    fn seg(a: C64, b: C64) -> LoopSet {
        LoopSet::curve(&CurvePath::new(Chart::D, vec![a, b])).unwrap()
    }

    fn polar(r: f64, th: f64) -> C64 {
        C64::from_polar(r, th)
    }

    #[test]
    fn bridge_is_pinned_with_bridge_variance() {
        let key = StreamKey::root(3).child("bridge");
        let m = 64;
        let t = 0.5;
        let mut var_mid = 0.0;
        let n = 4000;
        for i in 0..n {
            let mut rng = key.rng(i);
            let mut path = Vec::new();
            fill_bridge(&mut rng, C64::new(0.1, 0.2), t, m, &mut path);
            assert_eq!(path[0], path[m]);
            let x = path[m / 2] - C64::new(0.1, 0.2);
            var_mid += x.re * x.re;
        }
        var_mid /= n as f64;
        // Var X(t/2) = t/4 for each coordinate of a bridge of duration t.
        let se = 0.125 * (2.0f64 / n as f64).sqrt();
        assert!((var_mid - 0.125).abs() < 5.0 * se, "{var_mid}");
    }

    #[test]
    fn sample_loop_weight() {
        let key = StreamKey::root(1);
        let s = sample_loop(&key, 0, [-1.0, 1.0, -1.0, 1.0], 0.01, 16).unwrap();
        assert!((s.weight - 4.0 / (2.0 * core::f64::consts::PI * 0.01)).abs() < 1e-9);
        assert!(s.duration >= 0.01);
        assert_eq!(s.path.len(), 17);
        assert!(sample_loop(&key, 0, [0.0; 4], 0.01, 16).is_err());
    }

    #[test]
    fn excess_hit_distribution() {
        assert_eq!(excess_hits(&[0.7]), 0.0);
        assert_eq!(excess_hits(&[0.3, 0.6]), 0.3 * 0.6);
        let h = [0.2, 0.5, 0.9];
        let e_n: f64 = h.iter().sum();
        let p0: f64 = h.iter().map(|p| 1.0 - p).product();
        assert!((excess_hits(&h) - (e_n - 1.0 + p0)).abs() < 1e-15);
    }

    #[test]
    fn exact_zero_and_rejections() {
        let d = Region::domain(Chart::D);
        let a = seg(polar(0.2, 0.0), polar(0.6, 0.0));
        let b = seg(polar(0.2, 0.0), polar(0.5, 1.0));
        let p = LoopParams::new(1000, 1);
        assert_eq!(loop_mass_two_sets(&a, &b, &d, &p), Err(Error::NotDisjoint));
        assert!(loop_mass_two_sets(&a, &seg(polar(0.3, 2.0), polar(0.6, 2.0)), &d, &p.clone().with_t_min(-1.0)).is_err());
        let c = CurvePath::new(Chart::D, vec![polar(0.1, 0.0), polar(0.5, 0.0)]);
        let e = multi_cross_mass(&[c], &d, &p).unwrap();
        assert_eq!((e.mean, e.stderr), (0.0, 0.0));
        // Two sets farther apart than the diameter of a small domain.
        let small = Region::tube(&CurvePath::new(Chart::D, vec![C64::new(-0.5, 0.0), C64::new(0.5, 0.0)]), 0.05).unwrap();
        let left = seg(C64::new(-3.0, 0.0), C64::new(-2.9, 0.0));
        let right = seg(C64::new(2.9, 0.0), C64::new(3.0, 0.0));
        let e = loop_mass_two_sets(&left, &right, &small, &p).unwrap();
        assert_eq!(e.mean, 0.0);
    }

    #[test]
    fn symmetric_under_seed_pairing_and_pair_sum() {
        let d = Region::domain(Chart::D);
        let c1 = CurvePath::new(Chart::D, vec![polar(0.2, 0.0), polar(0.7, 0.0)]);
        let c2 = CurvePath::new(Chart::D, vec![polar(0.2, 2.0), polar(0.7, 2.0)]);
        let (a, b) = (LoopSet::curve(&c1).unwrap(), LoopSet::curve(&c2).unwrap());
        let p = LoopParams::new(20_000, 9);
        let ab = loop_mass_two_sets(&a, &b, &d, &p).unwrap();
        let ba = loop_mass_two_sets(&b, &a, &d, &p).unwrap();
        assert_eq!(ab.mean.to_bits(), ba.mean.to_bits());
        assert!(ab.mean > 0.0);
        let mc = multi_cross_mass(&[c1, c2], &d, &p).unwrap();
        assert_eq!(mc.mean.to_bits(), ab.mean.to_bits());
        let w = ab.window.unwrap();
        assert!(w.bias_bound < 1e-3 && w.t_min > 0.0);
    }

    #[test]
    fn restriction_to_smaller_domain_lowers_mass() {
        let d = Region::domain(Chart::D);
        let lens = Region::chordal_lens(0.6, 256).unwrap();
        let a = seg(polar(0.05, 0.0), polar(0.4, 0.0));
        let b = seg(polar(0.05, core::f64::consts::PI), polar(0.4, core::f64::consts::PI));
        let problem = LoopProblem {
            domains: vec![&d, &lens],
            sets: vec![&a, &b],
            queries: vec![
                LoopQuery {
                    domains: vec![0],
                    functional: Functional::AllHit(vec![0, 1]),
                },
                LoopQuery {
                    domains: vec![0, 1],
                    functional: Functional::AllHit(vec![0, 1]),
                },
            ],
        };
        let r = run(&problem, &LoopParams::new(20_000, 2)).unwrap();
        let diff = r.combination(&[1.0, -1.0]);
        assert!(diff.mean > 0.0);
        assert!(r.estimate(1).mean > 0.0);
    }

    #[test]
    fn outside_set_distance() {
        let lens = Region::chordal_lens(0.5, 256).unwrap();
        let out = LoopSet::outside(&lens).unwrap();
        let g = hyperbolic_geodesic(C64::new(-1.0, 0.0), C64::new(1.0, 0.0), 64).unwrap();
        let inner = CurvePath::new(Chart::D, g.points[8..56].to_vec());
        let s = separation(&LoopSet::curve(&inner).unwrap(), &out).unwrap();
        assert!(s > 0.0 && s < 0.5, "{s}");
        assert_eq!(out.distance(C64::new(0.0, 0.95), 1.0), 0.0);
    }
}
