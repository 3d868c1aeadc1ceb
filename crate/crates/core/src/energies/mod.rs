//! Loewner energies, potentials, kernels and exponent constants.

pub mod constants;
pub mod kernel;
pub mod multiradial;
pub mod potential;
pub mod quadrature;

pub use constants::{exponents, Case, Exponent, ExponentTable, Slot};
pub use kernel::{kernel, multiradial_kernel, poisson_kernel};
pub use multiradial::{
    multiradial_potential, multiradial_potential_from_curves, LoopTermForm, MultiRadialOptions, Staircase,
};
pub use potential::{
    arc_driving, chord_driving, chord_normalizer, chordal_potential, chordal_potential_from_driving, normalize_arc,
    multichordal_potential, normalize_chord, radial_potential, radial_potential_from_driving, rho_potential, rho_potential_from_driving,
    PotentialReport, Term, Truncation,
};
pub use quadrature::{
    chordal_energy, energy_gradient, forced_energy, forced_energy_with_track, forced_residuals, radial_energy,
    radial_rho_energy, rho_energy,
};
