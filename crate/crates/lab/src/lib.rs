//! File formats, run configuration and the command-line front end of
//! `loewner-lab-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod report;

pub use cli::run;
pub use config::RunConfig;
pub use error::{LabError, LabResult};
