//! Poisson excursion kernels and SLE partition-function kernels.

use alloc::vec::Vec;

use super::constants::{alpha, b, b_tilde};
use crate::conformal::{Chart, Configuration, ExtPoint};
use crate::{Error, Result, C64};
#[cfg(not(feature = "std"))]
use num_traits::Float as _;

/// `P_{D;x,y} = |x - y|^-2` for both charts, with `P := 1` when either
/// point is infinite.
pub fn poisson_kernel(x: ExtPoint, y: ExtPoint) -> Result<f64> {
    match (x, y) {
        (ExtPoint::Finite(a), ExtPoint::Finite(c)) => {
            let d = (a - c).norm();
            if d == 0.0 {
                return Err(Error::invalid("coincident marked points"));
            }
            Ok(1.0 / (d * d))
        }
        (ExtPoint::Infinity, ExtPoint::Infinity) => Err(Error::invalid("coincident marked points")),
        _ => Ok(1.0),
    }
}

/// `(P_{D;x,y})^2` scaled by an exponent: `|x - y|^{-2 w}`.
fn power_kernel(x: ExtPoint, y: ExtPoint, w: f64) -> Result<f64> {
    Ok(poisson_kernel(x, y)?.powf(w))
}

/// Radial kernel `|phi'(x)|^b |phi'(y)|^{b~}` for the disk automorphism
/// `phi` sending `y` to 0; equal to 1 when `y = 0`.
fn radial_kernel(x: C64, y: C64, wb: f64, wt: f64) -> Result<f64> {
    if y.norm() >= 1.0 {
        return Err(Error::invalid("interior point must lie in the disk"));
    }
    let den = |z: C64| (C64::new(1.0, 0.0) - y.conj() * z).norm_sqr();
    let scale = 1.0 - y.norm_sqr();
    let dx = scale / den(x);
    let dy = 1.0 / scale;
    Ok(dx.powf(wb) * dy.powf(wt))
}

/// Multi-radial kernel for boundary points `e^{i theta_j}`.
pub fn multiradial_kernel(thetas: &[f64], kappa: f64, mu: f64) -> f64 {
    let mut v = 1.0;
    for j in 0..thetas.len() {
        for l in j + 1..thetas.len() {
            v *= (0.5 * (thetas[j] - thetas[l])).sin().abs().powf(2.0 / kappa);
        }
    }
    v * ((mu / kappa) * thetas.iter().sum::<f64>()).exp()
}

/// Angles of finite boundary points of the disk.
pub fn boundary_angles(points: &[ExtPoint]) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|p| match p {
            ExtPoint::Finite(z) => Ok(z.arg()),
            ExtPoint::Infinity => Err(Error::invalid("disk boundary point cannot be infinite")),
        })
        .collect()
}

/// Kernel `H` of a configuration.
pub fn kernel(config: &Configuration) -> Result<f64> {
    let k = config.kappa;
    match (config.interior, config.boundary.len()) {
        (None, 2) => {
            let w = match config.rho {
                Some(r) => alpha(k, r),
                None => b(k),
            };
            power_kernel(config.boundary[0], config.boundary[1], w)
        }
        (None, m) if m % 2 == 0 && m > 0 => {
            let mut v = 1.0;
            for &(i, j) in &config.links {
                v *= power_kernel(config.boundary[i], config.boundary[j], b(k))?;
            }
            Ok(v)
        }
        (Some(y), 1) => {
            if config.chart != Chart::D {
                return Err(Error::ChartMismatch);
            }
            let x = config.boundary[0]
                .finite()
                .ok_or_else(|| Error::invalid("disk boundary point cannot be infinite"))?;
            radial_kernel(x, y, b(k), b_tilde(k))
        }
        (Some(y), _) => {
            if y.norm() != 0.0 {
                return Err(Error::invalid("multi-radial kernel needs the canonical interior point 0"));
            }
            let th = boundary_angles(&config.boundary)?;
            for j in 0..th.len() {
                for l in j + 1..th.len() {
                    if (config.boundary[j].finite().unwrap() - config.boundary[l].finite().unwrap()).norm() == 0.0 {
                        return Err(Error::invalid("coincident marked points"));
                    }
                }
            }
            Ok(multiradial_kernel(&th, k, config.mu.unwrap_or(0.0)))
        }
        _ => Err(Error::invalid("unsupported configuration")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let cfg = Configuration::chordal(
            Chart::H,
            ExtPoint::Finite(C64::new(0.0, 0.0)),
            ExtPoint::Finite(C64::new(2.0, 0.0)),
            2.0,
        );
        assert!((kernel(&cfg).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(kernel(&Configuration::radial(C64::new(1.0, 0.0), 2.7)).unwrap(), 1.0);
        let mut multi = Configuration::radial(C64::new(1.0, 0.0), 2.0);
        multi.boundary.push(ExtPoint::Finite(C64::new(-1.0, 0.0)));
        multi.n = Some(2);
        multi.mu = Some(0.0);
        assert!((kernel(&multi).unwrap() - 1.0).abs() < 1e-15);
        let same = Configuration::chordal(
            Chart::H,
            ExtPoint::Finite(C64::new(1.0, 0.0)),
            ExtPoint::Finite(C64::new(1.0, 0.0)),
            2.0,
        );
        assert!(kernel(&same).is_err());
    }

    #[test]
    fn disk_kernel_is_mobius_covariant() {
        // P_H(x, y) = |C'(x) C'(y)| P_D(Cx, Cy) for the Cayley map C.
        let c = |z: C64| (z - C64::i()) / (z + C64::i());
        let dc = |z: C64| (C64::new(0.0, 2.0) / ((z + C64::i()) * (z + C64::i()))).norm();
        let (x, y) = (C64::new(-0.7, 0.0), C64::new(2.3, 0.0));
        let ph = poisson_kernel(x.into(), y.into()).unwrap();
        let pd = poisson_kernel(c(x).into(), c(y).into()).unwrap();
        assert!((ph - dc(x) * dc(y) * pd).abs() < 1e-12);
    }
}
