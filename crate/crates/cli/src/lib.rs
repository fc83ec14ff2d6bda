//! Config-driven runs of the `lorentz-core` analyses.
//!
//! A run reads one JSON [`AnalysisConfig`], executes the requested analyses
//! in order and produces a [`Report`] that echoes the config and embeds every
//! witness, so that `verify` can replay it later.

pub mod config;
pub mod error;
pub mod export;
pub mod report;
pub mod verify;

pub use config::{Analysis, AnalysisConfig};
pub use error::CliError;
pub use export::{export_orbit_csv, write_orbit_csv};
pub use report::{run, Outcome, Report};
pub use verify::verify;
