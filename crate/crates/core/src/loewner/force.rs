//! Force-point tracks and the integrated SLE(kappa, rho) drift.

use alloc::vec::Vec;

use super::chordal::{rk4_adaptive, SWALLOW_TOL};
use super::driving::{DrivingFunction, DrivingKind};
use super::radial::RadialStep;
use crate::conformal::TiltedSlit;
use crate::{Error, Result, C64};
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

/// Where the force point starts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ForcePoint {
    /// Immediately to the right of (chordal) or counterclockwise from
    /// (radial) the starting driving value.
    Start,
    /// Real position (chordal) or angle (radial).
    At(f64),
}

impl ForcePoint {
    pub fn initial(&self, w0: f64) -> f64 {
        match self {
            ForcePoint::Start => w0,
            ForcePoint::At(v) => *v,
        }
    }
}

fn swallowed(time: f64) -> Error {
    Error::ForcePointSwallowed { time }
}

/// Force point after one step with linear driving from `w0` to `w1`.
pub fn force_step(kind: DrivingKind, t0: f64, dt: f64, w0: f64, w1: f64, v0: f64) -> Result<f64> {
    if v0 == w0 {
        return match kind {
            DrivingKind::Chordal => Ok(w0 + TiltedSlit::from_increment(w1 - w0, dt).x2),
            DrivingKind::Radial => {
                let step = RadialStep::solve(w0, dt, w1 - w0)?;
                step.boundary_angle_right()
            }
        };
    }
    let slope = (w1 - w0) / dt;
    let wf = |t: f64| C64::new(w0 + slope * (t - t0), 0.0);
    let v = |y: &[C64; 1], t: f64| -> Result<[C64; 1]> {
        let d = y[0].re - wf(t).re;
        if d.abs() < SWALLOW_TOL {
            return Err(swallowed(t));
        }
        Ok([C64::new(
            match kind {
                DrivingKind::Chordal => 2.0 / d,
                DrivingKind::Radial => 1.0 / (0.5 * d).tan(),
            },
            0.0,
        )])
    };
    let y = rk4_adaptive([C64::new(v0, 0.0)], t0, dt, &v, &wf, 0, 40).map_err(|e| match e {
        Error::Swallowed { time } => swallowed(time),
        e => e,
    })?;
    Ok(y[0].re)
}

/// `V_t` on the driving grid: `g_t(v)` (chordal) or `arg g_t(e^{iv})` (radial).
pub fn force_track(driving: &DrivingFunction, fp: ForcePoint) -> Result<Vec<f64>> {
    let mut v = fp.initial(driving.values[0]);
    let mut out = Vec::with_capacity(driving.len());
    out.push(v);
    for k in 0..driving.steps() {
        let (t0, t1) = (driving.grid[k], driving.grid[k + 1]);
        v = force_step(driving.kind, t0, t1 - t0, driving.values[k], driving.values[k + 1], v)?;
        out.push(v);
    }
    Ok(out)
}

/// `int rho Re 1/(W - V) dt` (chordal) or `int (rho/2) cot((W - V)/2) dt`
/// (radial) over one step, with `d = W - V` at the endpoints. The singular
/// part is integrated exactly under the assumption that `d^2` is linear in
/// time, so a force point at the driving value costs nothing extra.
pub fn drift_increment(kind: DrivingKind, rho: f64, dt: f64, d0: f64, d1: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    let sing = if d0 * d1 >= 0.0 && (d0 + d1) != 0.0 {
        2.0 * dt / (d0 + d1)
    } else {
        0.5 * dt * (recip(d0) + recip(d1))
    };
    match kind {
        DrivingKind::Chordal => rho * sing,
        DrivingKind::Radial => {
            let h = |d: f64| if d.abs() < 1e-4 { -d / 12.0 } else { 0.5 / (0.5 * d).tan() - 1.0 / d };
            rho * (sing + 0.5 * dt * (h(d0) + h(d1)))
        }
    }
}

fn recip(d: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        1.0 / d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_similar_chordal_track() {
        let rho = 1.5;
        let c = 2.0 / (rho + 2.0);
        let d = DrivingFunction::from_fn(DrivingKind::Chordal, 1.0, 400, |t| -rho * (c * t).sqrt()).unwrap();
        let v = force_track(&d, ForcePoint::Start).unwrap();
        let exact = |t: f64| 2.0 * (c * t).sqrt();
        assert!((v[1] - exact(d.grid[1])).abs() < 1e-12);
        assert!((v[400] - exact(1.0)).abs() < 5e-3, "{}", v[400]);
        let dr = drift_increment(DrivingKind::Chordal, rho, d.grid[1], 0.0, d.values[1] - v[1]);
        assert!((dr - d.values[1]).abs() < 1e-12);
    }

    #[test]
    fn radial_track_stays_ahead() {
        let d = DrivingFunction::from_fn(DrivingKind::Radial, 1.0, 100, |t| -0.5 * t.sqrt()).unwrap();
        let v = force_track(&d, ForcePoint::Start).unwrap();
        for (vk, wk) in v.iter().zip(&d.values).skip(1) {
            assert!(vk > wk && *vk < wk + 2.0 * core::f64::consts::PI);
        }
        let far = force_track(&d, ForcePoint::At(2.0)).unwrap();
        assert!(far[100] > far[0]);
    }
}
