//! Loewner evolution: forward flows, zipper traces and driving extraction.

pub mod chordal;
pub mod driving;
pub mod force;
pub mod radial;

pub use chordal::{
    chordal_forward, chordal_trace, extract_driving, extract_with_chain, halfplane_capacity, ForwardOptions,
    TraceOptions,
};
pub use driving::{geometric_grid, DrivingFunction, DrivingKind};
pub use force::{drift_increment, force_step, force_track, ForcePoint};
pub use radial::{extract_radial, radial_forward, radial_forward_jet, radial_trace, RadialStep};

use crate::conformal::{CurvePath, MapChain};

#[derive(Clone, Debug, PartialEq)]
pub struct TraceResult {
    pub curve: CurvePath,
    /// Realizes `g_T`: maps the slit domain onto the canonical domain.
    pub chain: MapChain,
    pub capacity: f64,
}
