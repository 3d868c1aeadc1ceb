//! Loewner energies of piecewise-linear driving functions.

use alloc::vec::Vec;

use crate::loewner::{drift_increment, force_track, DrivingFunction, DrivingKind, ForcePoint};
use crate::{Error, Result};

fn expect(d: &DrivingFunction, kind: DrivingKind) -> Result<()> {
    if d.kind != kind {
        return Err(Error::invalid("driving function has the wrong kind"));
    }
    Ok(())
}

fn dirichlet(d: &DrivingFunction) -> f64 {
    d.increments().map(|(dt, dw)| 0.5 * dw * dw / dt).sum()
}

/// `1/2 int W'^2` on the piecewise-linear interpolant.
pub fn chordal_energy(d: &DrivingFunction) -> Result<f64> {
    expect(d, DrivingKind::Chordal)?;
    Ok(dirichlet(d))
}

/// `1/2 int U'^2` on the piecewise-linear interpolant.
pub fn radial_energy(d: &DrivingFunction) -> Result<f64> {
    expect(d, DrivingKind::Radial)?;
    Ok(dirichlet(d))
}

/// Gradient of the Dirichlet energy with respect to the increments.
pub fn energy_gradient(d: &DrivingFunction) -> Vec<f64> {
    d.increments().map(|(dt, dw)| dw / dt).collect()
}

/// Per-step residuals `dW_k - D_k`, where `D_k` is the integrated drift.
pub fn forced_residuals(d: &DrivingFunction, rho: f64, v: &[f64]) -> Vec<f64> {
    d.increments()
        .enumerate()
        .map(|(k, (dt, dw))| {
            let d0 = d.values[k] - v[k];
            let d1 = d.values[k + 1] - v[k + 1];
            dw - drift_increment(d.kind, rho, dt, d0, d1)
        })
        .collect()
}

/// Forced energy `1/2 int (W' - drift)^2` with the force point tracked by
/// the Loewner flow. Works for both kinds.
pub fn forced_energy(d: &DrivingFunction, rho: f64, fp: ForcePoint) -> Result<f64> {
    if !(rho > -2.0) {
        return Err(Error::invalid("rho must exceed -2"));
    }
    if rho == 0.0 {
        return Ok(dirichlet(d));
    }
    let v = force_track(d, fp)?;
    Ok(forced_energy_with_track(d, rho, &v))
}

pub fn forced_energy_with_track(d: &DrivingFunction, rho: f64, v: &[f64]) -> f64 {
    forced_residuals(d, rho, v)
        .iter()
        .zip(d.increments())
        .map(|(r, (dt, _))| 0.5 * r * r / dt)
        .sum()
}

pub fn rho_energy(d: &DrivingFunction, rho: f64, fp: ForcePoint) -> Result<f64> {
    expect(d, DrivingKind::Chordal)?;
    forced_energy(d, rho, fp)
}

pub fn radial_rho_energy(d: &DrivingFunction, rho: f64, fp: ForcePoint) -> Result<f64> {
    expect(d, DrivingKind::Radial)?;
    forced_energy(d, rho, fp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let z = DrivingFunction::zero(DrivingKind::Chordal, 2.0, 10);
        assert_eq!(chordal_energy(&z).unwrap(), 0.0);
        let lin = DrivingFunction::from_fn(DrivingKind::Chordal, 2.0, 10, |t| 1.5 * t).unwrap();
        assert!((chordal_energy(&lin).unwrap() - 1.5 * 1.5 * 2.0 / 2.0).abs() < 1e-12);
        let ramp = DrivingFunction::from_fn(DrivingKind::Chordal, 3.0, 30, |t| t.min(1.0)).unwrap();
        assert!((chordal_energy(&ramp).unwrap() - 0.5).abs() < 1e-12);
        let rl = DrivingFunction::from_fn(DrivingKind::Radial, 1.0, 7, |t| -0.4 * t).unwrap();
        assert!((radial_energy(&rl).unwrap() - 0.08).abs() < 1e-12);
        assert!(radial_energy(&lin).is_err());
    }

    #[test]
    fn additivity_over_grid_points() {
        let d = DrivingFunction::from_fn(DrivingKind::Chordal, 1.0, 50, |t| (4.0 * t).sin()).unwrap();
        let head = d.truncated(20);
        let t20 = d.grid[20];
        let tail = DrivingFunction::new(DrivingKind::Chordal, d.grid[20..].iter().map(|t| t - t20).collect(), d.values[20..].to_vec())
            .unwrap();
        let whole = chordal_energy(&d).unwrap();
        let parts = chordal_energy(&head).unwrap() + chordal_energy(&tail).unwrap();
        assert!((whole - parts).abs() < 1e-12);
    }

    #[test]
    fn rho_zero_is_plain_energy() {
        let d = DrivingFunction::from_fn(DrivingKind::Chordal, 1.0, 64, |t| t.sin()).unwrap();
        assert_eq!(rho_energy(&d, 0.0, ForcePoint::Start).unwrap(), chordal_energy(&d).unwrap());
        let r = DrivingFunction::from_fn(DrivingKind::Radial, 1.0, 64, |t| t.sin()).unwrap();
        assert_eq!(radial_rho_energy(&r, 0.0, ForcePoint::Start).unwrap(), radial_energy(&r).unwrap());
    }

    #[test]
    fn self_similar_solution_has_small_rho_energy() {
        let rho = 1.0;
        let c = 2.0 / (rho + 2.0);
        let coarse = DrivingFunction::from_fn(DrivingKind::Chordal, 1.0, 200, |t: f64| -rho * (c * t).sqrt()).unwrap();
        let fine = DrivingFunction::from_fn(DrivingKind::Chordal, 1.0, 800, |t: f64| -rho * (c * t).sqrt()).unwrap();
        let e1 = rho_energy(&coarse, rho, ForcePoint::Start).unwrap();
        let e2 = rho_energy(&fine, rho, ForcePoint::Start).unwrap();
        assert!(e1 < 1e-6 && e2 < 1e-6, "{e1} {e2}");
    }

    #[test]
    fn forced_energy_refines() {
        let mk = |n| DrivingFunction::from_fn(DrivingKind::Chordal, 1.0, n, |t: f64| t.sin()).unwrap();
        let e1 = rho_energy(&mk(1000), 0.8, ForcePoint::At(0.5)).unwrap();
        let e2 = rho_energy(&mk(2000), 0.8, ForcePoint::At(0.5)).unwrap();
        assert!((e1 - e2).abs() < 1e-6, "{e1} {e2}");
    }
}
