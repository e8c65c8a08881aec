//! Files and command-line front end for `multiphoton-core`: system
//! configs, two-photon grid maps, peak reports and the `multiphoton`
//! binary.

pub mod config;
pub mod error;
pub mod gmap;
pub mod runners;

pub use config::{Config, SystemConfig};
pub use error::{CliError, Result};
pub use gmap::{read_grid_csv, run_gmap, Channels, EnergySpec, GridJob, GridMap, Range};
