//! Gradient descent on driving increments.
//!
//! The variables are the concatenated increments of one or more driving
//! functions on fixed grids; gradients are central finite differences and
//! steps are accepted by an Armijo backtracking line search.

use alloc::string::String;
use alloc::vec::Vec;

use crate::conformal::{Chart, Configuration, CurvePath, ExtPoint};
use crate::energies::{
    chord_normalizer, chordal_potential_from_driving, multiradial_potential, radial_potential_from_driving,
    rho_potential_from_driving, MultiRadialOptions, PotentialReport,
};
use crate::loewner::{chordal_trace, DrivingFunction, ForcePoint, TraceOptions};
use crate::loop_soup::{multi_cross_mass, LoopParams};
use crate::{Error, Result};
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

pub const ARMIJO_C: f64 = 1e-4;
pub const SHRINK: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub enum LoopMode {
    Off,
    /// Fixed-seed estimate; the loop sample is redrawn every `every` iterations.
    Frozen { params: LoopParams, every: usize },
    /// Fresh loop sample at every evaluation.
    FullMc { params: LoopParams },
}

impl LoopMode {
    pub fn name(&self) -> &'static str {
        match self {
            LoopMode::Off => "off",
            LoopMode::Frozen { .. } => "frozen-estimate",
            LoopMode::FullMc { .. } => "full-mc",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Objective {
    /// `H` of a chord from `x` to `y`, driver given in `(H; 0, infinity)`.
    Chordal { x: ExtPoint, y: ExtPoint },
    Rho { rho: f64, force: ForcePoint, x: ExtPoint, y: ExtPoint },
    Radial,
    RhoRadial { rho: f64 },
    /// One driver per link of `config`, each in its normalized half-plane.
    MultiChordal { config: Configuration },
    MultiRadial { options: MultiRadialOptions },
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::Chordal { .. } => "chordal",
            Objective::Rho { .. } => "rho",
            Objective::Radial => "radial",
            Objective::RhoRadial { .. } => "rho-radial",
            Objective::MultiChordal { .. } => "multi-chordal",
            Objective::MultiRadial { .. } => "multi-radial",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveSpec {
    pub objective: Objective,
    pub loops: LoopMode,
}

impl ObjectiveSpec {
    pub fn new(objective: Objective) -> Self {
        ObjectiveSpec {
            objective,
            loops: LoopMode::Off,
        }
    }

    pub fn with_loops(mut self, loops: LoopMode) -> Self {
        self.loops = loops;
        self
    }

    /// Potential of the drivers; `epoch` selects the frozen loop sample and
    /// `eval` the fresh one in full Monte Carlo mode.
    pub fn report(&self, drivers: &[DrivingFunction], epoch: u64, eval: u64) -> Result<PotentialReport> {
        let one = || -> Result<&DrivingFunction> {
            if drivers.len() != 1 {
                return Err(Error::invalid("objective takes a single driver"));
            }
            Ok(&drivers[0])
        };
        match &self.objective {
            Objective::Chordal { x, y } => chordal_potential_from_driving(one()?, *x, *y, false),
            Objective::Rho { rho, force, x, y } => rho_potential_from_driving(one()?, *rho, *force, *x, *y, false),
            Objective::Radial => radial_potential_from_driving(one()?, None, false),
            Objective::RhoRadial { rho } => radial_potential_from_driving(one()?, Some(*rho), false),
            Objective::MultiRadial { options } => multiradial_potential(drivers, options),
            Objective::MultiChordal { config } => self.multichordal(config, drivers, epoch, eval),
        }
    }

    fn multichordal(&self, config: &Configuration, drivers: &[DrivingFunction], epoch: u64, eval: u64) -> Result<PotentialReport> {
        if drivers.len() != config.links.len() {
            return Err(Error::invalid("one driver per link is required"));
        }
        let mut curves: Vec<CurvePath> = Vec::with_capacity(drivers.len());
        let mut r = PotentialReport::new(0.0, 0.0, false);
        for (k, (d, &(i, j))) in drivers.iter().zip(&config.links).enumerate() {
            let (x, y) = (config.boundary[i], config.boundary[j]);
            let to_chart = chord_normalizer(config.chart, x, y)?.inverse();
            let c = chordal_trace(d, &TraceOptions::default())?.curve.map(&to_chart, config.chart)?;
            curves.push(c);
            let p = chordal_potential_from_driving(d, x, y, false)?;
            r.energy += p.energy;
            r.horizon = r.horizon.max(p.horizon);
            for t in &p.terms {
                r.push(&alloc::format!("{}[{k}]", t.name), t.value);
            }
        }
        let params = match &self.loops {
            LoopMode::Off => return Ok(r),
            LoopMode::Frozen { params, .. } => params.clone().with_stream(&alloc::format!("opt-epoch-{epoch}")),
            LoopMode::FullMc { params } => params.clone().with_stream(&alloc::format!("opt-eval-{eval}")),
        };
        let mass = multi_cross_mass(&curves, &crate::conformal::Region::domain(Chart::D), &params)?;
        r.push_estimate("loop_term", &mass);
        Ok(r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerOptions {
    /// Finite-difference step.
    pub h: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
    pub max_backtracks: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            h: 1e-5,
            max_iter: 500,
            grad_tol: 1e-8,
            step_tol: 1e-14,
            max_backtracks: 60,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerResult {
    pub drivers: Vec<DrivingFunction>,
    pub report: PotentialReport,
    /// Objective after every accepted step (first entry: initial point).
    pub trace: Vec<f64>,
    /// Trace indices where a frozen loop sample was redrawn.
    pub refreshes: Vec<usize>,
    pub iterations: usize,
    pub rejected_steps: usize,
    pub grad_norm: f64,
    pub stop: String,
    pub loop_mode: &'static str,
}

fn unpack(template: &[DrivingFunction], x: &[f64]) -> Result<Vec<DrivingFunction>> {
    let mut out = Vec::with_capacity(template.len());
    let mut off = 0;
    for d in template {
        let n = d.steps();
        out.push(DrivingFunction::from_increments(d.kind, d.grid.clone(), d.values[0], &x[off..off + n])?);
        off += n;
    }
    Ok(out)
}

fn pack(drivers: &[DrivingFunction]) -> Vec<f64> {
    drivers.iter().flat_map(|d| d.increments_vec()).collect()
}

struct Problem<'a> {
    spec: &'a ObjectiveSpec,
    template: &'a [DrivingFunction],
}

impl Problem<'_> {
    fn value(&self, x: &[f64], epoch: u64, eval: u64) -> Result<f64> {
        let r = self.spec.report(&unpack(self.template, x)?, epoch, eval)?;
        if r.total.is_finite() {
            Ok(r.total)
        } else {
            Err(Error::NonFinite { what: "objective" })
        }
    }

    fn gradient(&self, x: &[f64], h: f64, epoch: u64, eval: u64) -> Result<Vec<f64>> {
        let coord = |i: usize| -> Result<f64> {
            let mut p = x.to_vec();
            p[i] = x[i] + h;
            let fp = self.value(&p, epoch, eval)?;
            p[i] = x[i] - h;
            let fm = self.value(&p, epoch, eval)?;
            Ok((fp - fm) / (2.0 * h))
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..x.len()).into_par_iter().map(coord).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..x.len()).map(coord).collect()
        }
    }
}

/// Central-difference gradient of the objective with respect to the increments.
pub fn finite_diff_gradient(spec: &ObjectiveSpec, point: &[DrivingFunction], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let p = Problem { spec, template: point };
    let x = pack(point);
    p.value(&x, 0, 0)?;
    p.gradient(&x, h, 0, 0)
}

pub fn minimize_potential(spec: &ObjectiveSpec, init: &[DrivingFunction], opts: &OptimizerOptions) -> Result<OptimizerResult> {
    if init.is_empty() || init.iter().any(|d| d.steps() < 2) {
        return Err(Error::invalid("each driver needs at least two steps"));
    }
    let p = Problem { spec, template: init };
    let mut x = pack(init);
    let refresh_every = match &spec.loops {
        LoopMode::Frozen { every, .. } => (*every).max(1),
        _ => usize::MAX,
    };
    let mut epoch = 0u64;
    let mut evals = 0u64;
    let mut f = p.value(&x, epoch, evals)?;
    let mut trace = alloc::vec![f];
    let mut refreshes = Vec::new();
    let mut step = 1.0f64;
    let mut rejected = 0;
    let mut grad_norm = f64::INFINITY;
    let mut stop = String::from("max-iter");
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        if it > 0 && it % refresh_every == 0 {
            epoch += 1;
            f = p.value(&x, epoch, evals)?;
            refreshes.push(trace.len());
            trace.push(f);
        }
        evals += 1;
        let g = p.gradient(&x, opts.h, epoch, evals)?;
        let gg: f64 = g.iter().map(|v| v * v).sum();
        grad_norm = gg.sqrt();
        if grad_norm <= opts.grad_tol {
            stop = String::from("gradient");
            break;
        }
        let mut lam = (step * 2.0).min(1e6);
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let cand: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - lam * b).collect();
            evals += 1;
            match p.value(&cand, epoch, evals) {
                Ok(fc) if fc <= f - ARMIJO_C * lam * gg => {
                    accepted = Some((cand, fc));
                    break;
                }
                Ok(_) => {}
                Err(_) => rejected += 1,
            }
            lam *= SHRINK;
        }
        match accepted {
            Some((cand, fc)) => {
                let moved = lam * grad_norm;
                x = cand;
                f = fc;
                step = lam;
                trace.push(f);
                if moved <= opts.step_tol {
                    stop = String::from("step");
                    break;
                }
            }
            None => {
                stop = String::from("line-search");
                break;
            }
        }
    }
    let drivers = unpack(init, &x)?;
    let report = spec.report(&drivers, epoch, evals)?;
    Ok(OptimizerResult {
        drivers,
        report,
        trace,
        refreshes,
        iterations,
        rejected_steps: rejected,
        grad_norm,
        stop,
        loop_mode: spec.loops.name(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energies::{chordal_energy, energy_gradient, forced_energy};
    use crate::loewner::DrivingKind;
    use crate::C64;

    fn disk_chord() -> Objective {
        Objective::Chordal {
            x: ExtPoint::Finite(C64::new(-1.0, 0.0)),
            y: ExtPoint::Finite(C64::new(1.0, 0.0)),
        }
    }

    #[test]
    fn chordal_minimizer_is_the_geodesic() {
        let init = DrivingFunction::from_fn(DrivingKind::Chordal, 1.0, 40, |t| 0.3 * (3.0 * t).sin()).unwrap();
        let spec = ObjectiveSpec::new(disk_chord());
        let r = minimize_potential(&spec, &[init], &OptimizerOptions::default()).unwrap();
        assert!(r.report.energy <= 1e-3, "{}", r.report.energy);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn gradient_matches_analytic_energy_gradient() {
        let d = DrivingFunction::from_fn(DrivingKind::Chordal, 1.0, 30, |t| (2.0 * t).sin() + t * t).unwrap();
        let spec = ObjectiveSpec::new(disk_chord());
        let exact: Vec<f64> = energy_gradient(&d).iter().map(|g| g / 12.0).collect();
        let fd = finite_diff_gradient(&spec, core::slice::from_ref(&d), 1e-4).unwrap();
        let num: f64 = exact.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let den: f64 = exact.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(num / den < 1e-6, "{}", num / den);
        assert!(finite_diff_gradient(&spec, &[d], 0.0).is_err());
        let z = DrivingFunction::zero(DrivingKind::Chordal, 1.0, 10);
        assert!(finite_diff_gradient(&ObjectiveSpec::new(disk_chord()), &[z], 1e-3)
            .unwrap()
            .iter()
            .all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn rho_minimizer_matches_drift_flow() {
        let rho = 1.0;
        let x = ExtPoint::Finite(C64::new(0.0, 0.0));
        let spec = ObjectiveSpec::new(Objective::Rho {
            rho,
            force: ForcePoint::Start,
            x,
            y: ExtPoint::Infinity,
        });
        let init = DrivingFunction::from_fn(DrivingKind::Chordal, 1.0, 24, |t| -0.3 * t).unwrap();
        let r = minimize_potential(&spec, &[init], &OptimizerOptions::default()).unwrap();
        let d = &r.drivers[0];
        let e = forced_energy(d, rho, ForcePoint::Start).unwrap();
        assert!(e <= 1e-3, "{e}");
        let c = 2.0 / (rho + 2.0);
        let err = d.sup_error(|t| -rho * (c * t).sqrt(), 1);
        assert!(err <= 1e-2, "{err}");
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(chordal_energy(d).unwrap() > 0.0);
    }
}
