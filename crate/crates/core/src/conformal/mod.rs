//! Charts, analytic maps, geodesics and regions.

pub mod curve;
pub mod geodesic;
pub mod index;
pub mod map;
pub mod region;
pub mod slit;

pub use curve::{Chart, Configuration, CurvePath, ExtPoint, Marked};
pub use geodesic::hyperbolic_geodesic;
pub use index::SegmentGrid;
pub use map::{Jet, MapChain, Primitive};
pub use region::{region_contains, BoundaryArc, Region};
pub use slit::TiltedSlit;

use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CayleyDirection {
    HalfPlaneToDisk,
    DiskToHalfPlane,
}

/// Cayley chart `z -> (z - i)/(z + i)` and its inverse, on extended points.
pub fn cayley(p: ExtPoint, dir: CayleyDirection) -> Result<ExtPoint> {
    let i = C64::i();
    let one = C64::new(1.0, 0.0);
    match dir {
        CayleyDirection::HalfPlaneToDisk => match p {
            ExtPoint::Infinity => Ok(ExtPoint::Finite(one)),
            ExtPoint::Finite(z) => {
                if (z + i).norm_sqr() == 0.0 {
                    return Err(Error::Singular {
                        map: "cayley",
                        at: (z.re, z.im),
                    });
                }
                Ok(ExtPoint::Finite((z - i) / (z + i)))
            }
        },
        CayleyDirection::DiskToHalfPlane => match p {
            ExtPoint::Infinity => Ok(ExtPoint::Finite(-i)),
            ExtPoint::Finite(w) => {
                if (one - w).norm_sqr() == 0.0 {
                    return Ok(ExtPoint::Infinity);
                }
                Ok(ExtPoint::Finite(i * (one + w) / (one - w)))
            }
        },
    }
}

/// Derivative of the Cayley chart at a finite non-singular point.
pub fn cayley_derivative(z: C64, dir: CayleyDirection) -> Result<C64> {
    MapChain::single(Primitive::Cayley {
        to_disk: dir == CayleyDirection::HalfPlaneToDisk,
    })
    .derivative(z)
}

/// Chart change `z -> -1/z`, used when infinity is a marked point.
pub fn reciprocal_chart() -> Primitive {
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    Primitive::mobius(zero, -one, one, zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cayley_examples() {
        use CayleyDirection::*;
        let f = |z: C64| cayley(ExtPoint::Finite(z), HalfPlaneToDisk).unwrap();
        assert_eq!(f(C64::i()), ExtPoint::Finite(C64::new(0.0, 0.0)));
        assert_eq!(f(C64::new(0.0, 0.0)), ExtPoint::Finite(C64::new(-1.0, 0.0)));
        assert_eq!(
            cayley(ExtPoint::Infinity, HalfPlaneToDisk).unwrap(),
            ExtPoint::Finite(C64::new(1.0, 0.0))
        );
        assert!(cayley(ExtPoint::Finite(-C64::i()), HalfPlaneToDisk).is_err());
        assert_eq!(
            cayley(ExtPoint::Finite(C64::new(1.0, 0.0)), DiskToHalfPlane).unwrap(),
            ExtPoint::Infinity
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn cayley_roundtrip(r in 0.0..0.999f64, a in 0.0..core::f64::consts::TAU) {
            use CayleyDirection::*;
            let w = C64::from_polar(r, a);
            let z = cayley(ExtPoint::Finite(w), DiskToHalfPlane).unwrap();
            let back = cayley(z, HalfPlaneToDisk).unwrap().finite().unwrap();
            prop_assert!((back - w).norm() < 1e-12);
        }
    }
}
