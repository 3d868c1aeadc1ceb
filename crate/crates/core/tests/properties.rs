use loewner_lab_core::conformal::{cayley, CayleyDirection, ExtPoint};
use loewner_lab_core::energies::{chordal_energy, exponents, Case};
use loewner_lab_core::loewner::{chordal_trace, extract_driving, halfplane_capacity, DrivingFunction, DrivingKind, TraceOptions};
use loewner_lab_core::sle::{path_stream, sample_driving, SleConfig};
use loewner_lab_core::C64;
use proptest::prelude::*;

fn driver(a: f64, b: f64, n: usize) -> DrivingFunction {
    DrivingFunction::from_fn(DrivingKind::Chordal, 1.0, n, |t| a * t + b * (3.0 * t).sin()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zipper_roundtrip_recovers_driver(a in -1.5f64..1.5, b in -0.8f64..0.8) {
        let d = driver(a, b, 200);
        let curve = chordal_trace(&d, &TraceOptions::default()).unwrap().curve;
        let back = extract_driving(&curve).unwrap();
        let err = d.values.iter().zip(&back.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-6, "roundtrip error {err}");
    }

    #[test]
    fn trace_capacity_matches_horizon(a in -1.5f64..1.5, b in -0.8f64..0.8) {
        let curve = chordal_trace(&driver(a, b, 200), &TraceOptions::default()).unwrap().curve;
        let cap = halfplane_capacity(&curve).unwrap();
        prop_assert!((cap - 1.0).abs() < 1e-6, "capacity {cap}");
    }

    #[test]
    fn linear_driver_energy(a in -3.0f64..3.0, t in 0.1f64..4.0) {
        let d = DrivingFunction::from_fn(DrivingKind::Chordal, t, 50, |s| a * s).unwrap();
        let e = chordal_energy(&d).unwrap();
        prop_assert!((e - 0.5 * a * a * t).abs() <= 1e-12 * (1.0 + e));
    }

    #[test]
    fn cayley_roundtrip(re in -0.99f64..0.99, im in -0.99f64..0.99) {
        let z = C64::new(re, im);
        prop_assume!(z.norm() < 0.99);
        let h = cayley(ExtPoint::Finite(z), CayleyDirection::DiskToHalfPlane).unwrap();
        match cayley(h, CayleyDirection::HalfPlaneToDisk).unwrap() {
            ExtPoint::Finite(w) => prop_assert!((w - z).norm() < 1e-12),
            ExtPoint::Infinity => prop_assert!(false, "finite point mapped to infinity"),
        }
    }

    #[test]
    fn ratio_term_agrees_with_limits(kappa in 1e-3f64..4.0, l0 in -2.0f64..2.0, l1 in -2.0f64..2.0) {
        let t = exponents(kappa, Case::Radial).unwrap();
        let a = t.ratio_term(&[l0, l1]).unwrap();
        let b = t.ratio_term_from_limits(&[l0, l1]).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn sle_paths_are_reproducible(seed in 0u64..1000, index in 0u64..1000) {
        let cfg = SleConfig::chordal(2.5, 1.0, 64);
        let a = sample_driving(&cfg, &path_stream(seed), index).unwrap();
        let b = sample_driving(&cfg, &path_stream(seed), index).unwrap();
        prop_assert_eq!(a.driving.values, b.driving.values);
    }
}
