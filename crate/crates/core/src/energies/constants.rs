//! Conformal weights, central charge and the Onsager-Machlup exponents.

use alloc::vec::Vec;

use crate::{Error, Result};

pub fn b(kappa: f64) -> f64 {
    (6.0 - kappa) / (2.0 * kappa)
}

pub fn c(kappa: f64) -> f64 {
    -(6.0 - kappa) * (8.0 - 3.0 * kappa) / (2.0 * kappa)
}

pub fn b_tilde(kappa: f64) -> f64 {
    (6.0 - kappa) * (kappa - 2.0) / (8.0 * kappa)
}

pub fn b1(kappa: f64) -> f64 {
    b(kappa)
}

pub fn b2(kappa: f64, rho: f64) -> f64 {
    rho * (rho + 4.0 - kappa) / (4.0 * kappa)
}

pub fn b3(kappa: f64, rho: f64) -> f64 {
    rho / kappa
}

pub fn alpha(kappa: f64, rho: f64) -> f64 {
    (rho + 2.0) * (rho + 6.0 - kappa) / (4.0 * kappa)
}

pub fn beta(kappa: f64, rho: f64) -> f64 {
    (rho + kappa - 2.0) * (rho + 6.0 - kappa) / (8.0 * kappa)
}

pub fn b_tilde_n(kappa: f64, n: usize, mu: f64) -> f64 {
    let n = n as f64;
    (n * n - 1.0 - mu * mu) / (2.0 * kappa)
}

/// Which measure a ratio experiment compares.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Case {
    Chordal,
    ForcedChordal { rho: f64 },
    MultiChordal { n: usize },
    Radial,
    ForcedRadial { rho: f64 },
    MultiRadial { n: usize, mu: f64 },
}

impl Case {
    pub fn name(&self) -> &'static str {
        match self {
            Case::Chordal => "chordal",
            Case::ForcedChordal { .. } => "rho-chordal",
            Case::MultiChordal { .. } => "multi-chordal",
            Case::Radial => "radial",
            Case::ForcedRadial { .. } => "rho-radial",
            Case::MultiRadial { .. } => "multi-radial",
        }
    }

    fn check(&self, kappa: f64) -> Result<()> {
        if !(kappa > 0.0 && kappa <= 4.0) {
            return Err(Error::invalid("kappa must lie in (0, 4]"));
        }
        match *self {
            Case::ForcedChordal { rho } | Case::ForcedRadial { rho } if !(rho > -2.0) => {
                Err(Error::invalid("rho must exceed -2"))
            }
            Case::MultiChordal { n } | Case::MultiRadial { n, .. } if n == 0 => Err(Error::invalid("n must be positive")),
            _ => Ok(()),
        }
    }
}

/// Kind of marked point an exponent belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    /// One boundary point; `count` identical copies.
    Boundary { count: usize },
    Interior,
}

/// One marked-point family of a case.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exponent {
    pub slot: Slot,
    /// Covariance exponent `b_kappa(j)` of the kernel.
    pub weight: f64,
    /// `lim_{kappa -> 0} b_kappa(j) / c(kappa)`, in closed form.
    pub weight_over_c_limit: f64,
    /// `e(j) = -2 lim b_kappa(j) / c(kappa)`.
    pub deformation: f64,
    /// `e_kappa(j) = b_kappa(j) - c lim(b_kappa(j) / c)`.
    pub e_kappa: f64,
    /// Coefficient of `log|f'(x_j)|` added to `(c/2) Delta H`, as displayed
    /// in the neighbourhood-ratio limits.
    pub ratio_coefficient: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentTable {
    pub kappa: f64,
    pub case: Case,
    pub b: f64,
    pub c: f64,
    pub b_tilde: f64,
    pub b1: Option<f64>,
    pub b2: Option<f64>,
    pub b3: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub b_tilde_n: Option<f64>,
    pub exponents: Vec<Exponent>,
}

/// Weight families and their `b/c` limits for each case.
fn weights(case: Case, kappa: f64) -> Vec<(Slot, f64, f64)> {
    let bd = |count| Slot::Boundary { count };
    match case {
        Case::Chordal => alloc::vec![(bd(2), b(kappa), -1.0 / 8.0)],
        Case::MultiChordal { n } => alloc::vec![(bd(2 * n), b(kappa), -1.0 / 8.0)],
        Case::ForcedChordal { rho } => {
            alloc::vec![(bd(2), alpha(kappa, rho), -(rho + 2.0) * (rho + 6.0) / 96.0)]
        }
        Case::Radial => alloc::vec![(bd(1), b(kappa), -1.0 / 8.0), (Slot::Interior, b_tilde(kappa), 1.0 / 16.0)],
        Case::ForcedRadial { rho } => alloc::vec![
            (bd(1), alpha(kappa, rho), -(rho + 2.0) * (rho + 6.0) / 96.0),
            (Slot::Interior, beta(kappa, rho), -(rho - 2.0) * (rho + 6.0) / 192.0),
        ],
        Case::MultiRadial { n, mu } => {
            let nn = n as f64;
            alloc::vec![
                (bd(n), b(kappa), -1.0 / 8.0),
                (
                    Slot::Interior,
                    b_tilde(kappa) + b_tilde_n(kappa, n, mu),
                    1.0 / 16.0 - (nn * nn - 1.0 - mu * mu) / 48.0,
                ),
            ]
        }
    }
}

/// Displayed ratio coefficients `F`, one per weight family.
pub fn displayed_coefficients(case: Case, kappa: f64) -> Vec<f64> {
    match case {
        Case::Chordal | Case::MultiChordal { .. } => alloc::vec![-3.0 * (6.0 - kappa) / 16.0],
        Case::ForcedChordal { rho } => alloc::vec![forced_boundary(kappa, rho)],
        Case::Radial => alloc::vec![-3.0 * (6.0 - kappa) / 16.0, -(6.0 - kappa) / 32.0],
        Case::ForcedRadial { rho } => alloc::vec![
            forced_boundary(kappa, rho),
            (3.0 * (rho + 2.0) * (rho + 2.0) * kappa - 2.0 * (13.0 * rho * rho + 52.0 * rho + 36.0)) / 384.0,
        ],
        Case::MultiRadial { n, mu } => {
            let nn = n as f64;
            alloc::vec![
                -3.0 * (6.0 - kappa) / 16.0,
                (3.0 * kappa - 26.0) * (nn * nn - 1.0 - mu * mu) / 96.0 - (6.0 - kappa) / 32.0,
            ]
        }
    }
}

fn forced_boundary(kappa: f64, rho: f64) -> f64 {
    (rho + 2.0) * (3.0 * rho * kappa + 18.0 * kappa - 26.0 * rho - 108.0) / 192.0
}

/// Deformation-identity coefficients of `log|f'(x_j)|`, as displayed.
pub fn identity_coefficients(case: Case) -> Vec<f64> {
    match case {
        Case::Chordal | Case::MultiChordal { .. } => alloc::vec![0.25],
        Case::ForcedChordal { rho } => alloc::vec![(rho + 2.0) * (rho + 6.0) / 48.0],
        Case::Radial => alloc::vec![0.25, -0.125],
        Case::ForcedRadial { rho } => alloc::vec![(rho + 2.0) * (rho + 6.0) / 48.0, (rho - 2.0) * (rho + 6.0) / 96.0],
        Case::MultiRadial { n, mu } => {
            let nn = n as f64;
            alloc::vec![0.25, (nn * nn - 4.0 - mu * mu) / 24.0]
        }
    }
}

pub fn exponents(kappa: f64, case: Case) -> Result<ExponentTable> {
    case.check(kappa)?;
    let cc = c(kappa);
    let shown = displayed_coefficients(case, kappa);
    let exps = weights(case, kappa)
        .into_iter()
        .zip(shown)
        .map(|((slot, w, lim), shown)| Exponent {
            slot,
            weight: w,
            weight_over_c_limit: lim,
            deformation: -2.0 * lim,
            e_kappa: w - cc * lim,
            ratio_coefficient: shown,
        })
        .collect();
    let (rho, n, mu) = match case {
        Case::ForcedChordal { rho } | Case::ForcedRadial { rho } => (Some(rho), None, None),
        Case::MultiChordal { n } => (None, Some(n), None),
        Case::MultiRadial { n, mu } => (None, Some(n), Some(mu)),
        _ => (None, None, None),
    };
    Ok(ExponentTable {
        kappa,
        case,
        b: b(kappa),
        c: cc,
        b_tilde: b_tilde(kappa),
        b1: rho.map(|_| b1(kappa)),
        b2: rho.map(|r| b2(kappa, r)),
        b3: rho.map(|r| b3(kappa, r)),
        alpha: rho.map(|r| alpha(kappa, r)),
        beta: rho.map(|r| beta(kappa, r)),
        b_tilde_n: n.map(|n| b_tilde_n(kappa, n, mu.unwrap_or(0.0))),
        exponents: exps,
    })
}

impl ExponentTable {
    /// The additive ratio term `sum_j coef_j log|f'(x_j)|` from displayed
    /// coefficients. `log_derivs` holds one entry per marked point in slot
    /// order (boundary points first, then the interior point).
    pub fn ratio_term(&self, log_derivs: &[f64]) -> Result<f64> {
        self.combine(log_derivs, |e| e.ratio_coefficient)
    }

    /// The same term through `-e_kappa(j)`.
    pub fn ratio_term_from_limits(&self, log_derivs: &[f64]) -> Result<f64> {
        self.combine(log_derivs, |e| -e.e_kappa)
    }

    /// Deformation-identity term `sum_j e(j) log|f'(x_j)|`.
    pub fn deformation_term(&self, log_derivs: &[f64]) -> Result<f64> {
        self.combine(log_derivs, |e| e.deformation)
    }

    pub fn marked_count(&self) -> usize {
        self.exponents
            .iter()
            .map(|e| match e.slot {
                Slot::Boundary { count } => count,
                Slot::Interior => 1,
            })
            .sum()
    }

    fn combine(&self, log_derivs: &[f64], coef: impl Fn(&Exponent) -> f64) -> Result<f64> {
        if log_derivs.len() != self.marked_count() {
            return Err(Error::invalid("wrong number of marked-point derivatives"));
        }
        let mut k = 0;
        let mut total = 0.0;
        for e in &self.exponents {
            let m = match e.slot {
                Slot::Boundary { count } => count,
                Slot::Interior => 1,
            };
            for _ in 0..m {
                total += coef(e) * log_derivs[k];
                k += 1;
            }
        }
        Ok(total)
    }
}

/// Numerical `-2 b_kappa(j) / c(kappa)` for every family at the given kappa.
pub fn limit_ratios(kappa: f64, case: Case) -> Vec<f64> {
    weights(case, kappa).into_iter().map(|(_, w, _)| -2.0 * w / c(kappa)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cases() -> [Case; 7] {
        [
            Case::Chordal,
            Case::ForcedChordal { rho: 0.7 },
            Case::ForcedChordal { rho: -1.3 },
            Case::Radial,
            Case::ForcedRadial { rho: 1.1 },
            Case::MultiRadial { n: 2, mu: 0.0 },
            Case::MultiRadial { n: 3, mu: 0.4 },
        ]
    }

    #[test]
    fn substitution_values() {
        assert_eq!(c(2.0), -2.0);
        assert_eq!(b(2.0), 1.0);
        assert_eq!(b_tilde(2.0), 0.0);
        assert_eq!(b_tilde_n(1.7, 1, 0.0), 0.0);
        assert_eq!(b2(3.0, 0.0), 0.0);
        assert_eq!(b3(3.0, 0.0), 0.0);
        for k in 1..=50 {
            let kappa = 4.0 * k as f64 / 50.0;
            assert!((alpha(kappa, 0.0) - b(kappa)).abs() < 1e-12);
            assert!((beta(kappa, 0.0) - b_tilde(kappa)).abs() < 1e-12);
            let rho = 0.37 * k as f64 - 1.9;
            assert!((b1(kappa) + b2(kappa, rho) + b3(kappa, rho) - alpha(kappa, rho)).abs() < 1e-12);
        }
    }

    #[test]
    fn displayed_and_limit_routes_agree() {
        for case in cases() {
            for k in 1..=40 {
                let kappa = 0.1 * k as f64;
                let t = exponents(kappa, case).unwrap();
                for e in &t.exponents {
                    assert!(
                        (e.ratio_coefficient + e.e_kappa).abs() < 1e-12 * (1.0 + e.e_kappa.abs()),
                        "{case:?} {kappa} {e:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn closed_form_limits_match_small_kappa() {
        for case in cases() {
            let t = exponents(1e-8, case).unwrap();
            for (e, r) in t.exponents.iter().zip(limit_ratios(1e-8, case)) {
                assert!((e.deformation - r).abs() < 1e-6, "{case:?}");
            }
            for (e, l) in t.exponents.iter().zip(identity_coefficients(case)) {
                assert!((e.deformation - l).abs() < 1e-12, "{case:?}");
            }
        }
    }

    #[test]
    fn radial_normalization_cancels() {
        let t = exponents(2.5, Case::Radial).unwrap();
        let l1 = 0.3f64;
        let v = t.ratio_term(&[l1, -6.0 * l1]).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(exponents(0.0, Case::Chordal).is_err());
        assert!(exponents(4.5, Case::Chordal).is_err());
        assert!(exponents(2.0, Case::ForcedChordal { rho: -2.0 }).is_err());
        let t = exponents(2.0, Case::Chordal).unwrap();
        assert!(t.ratio_term(&[0.1]).is_err());
    }
}
