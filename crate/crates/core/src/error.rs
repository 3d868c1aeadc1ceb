use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A primitive map was evaluated at (or numerically on top of) a pole,
    /// branch point or slit tip.
    Singular { map: &'static str, at: (f64, f64) },
    /// The point hit the hull before the end of the driving grid.
    Swallowed { time: f64 },
    /// The force point collided with the driving function.
    ForcePointSwallowed { time: f64 },
    ChartMismatch,
    SelfIntersecting { vertex: usize },
    NotDisjoint,
    NoConvergence { what: &'static str },
    NonFinite { what: &'static str },
    Invalid(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Singular { .. } => "singular",
            Error::Swallowed { .. } => "swallowed",
            Error::ForcePointSwallowed { .. } => "force_point_swallowed",
            Error::ChartMismatch => "chart_mismatch",
            Error::SelfIntersecting { .. } => "self_intersecting",
            Error::NotDisjoint => "not_disjoint",
            Error::NoConvergence { .. } => "no_convergence",
            Error::NonFinite { .. } => "non_finite",
            Error::Invalid(_) => "invalid_input",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Singular { map, at } => {
                write!(f, "{map} is singular at ({}, {})", at.0, at.1)
            }
            Error::Swallowed { time } => write!(f, "point swallowed at t = {time}"),
            Error::ForcePointSwallowed { time } => {
                write!(f, "force point swallowed at t = {time}")
            }
            Error::ChartMismatch => write!(f, "region and curve live in different charts"),
            Error::SelfIntersecting { vertex } => {
                write!(f, "polyline is not simple near vertex {vertex}")
            }
            Error::NotDisjoint => write!(f, "sets are not disjoint"),
            Error::NoConvergence { what } => write!(f, "{what} did not converge"),
            Error::NonFinite { what } => write!(f, "non-finite value in {what}"),
            Error::Invalid(msg) => write!(f, "invalid input: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
