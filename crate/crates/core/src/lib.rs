//! Numerical Loewner evolution: zipper maps, driving-function extraction,
//! Loewner energies and potentials, Brownian loop masses, SLE sampling and
//! the deformation/ratio checks built on top of them.
//!
//! The crate is `no_std` + `alloc` when the default `std` feature is off.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

extern crate alloc;

pub mod conformal;
pub mod energies;
pub mod error;
pub mod estimate;
pub mod loewner;
pub mod loop_soup;
pub mod optimizer;
pub mod rng;
pub mod sle;
pub mod verifier;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use estimate::Estimate;
