//! Run configuration, orchestration and file formats.

pub mod config;
pub mod initial;
pub mod run;
pub mod snapshot;
pub mod timeseries;
#[cfg(feature = "oracle")]
pub mod verify;

pub use config::{Frame, Mode, PotentialSpec, RunConfig};
pub use initial::{gaussian_initial, InitialState};
pub use run::{analyze, run, Report, RunOutput};
