//! Batch driver for the p-Willmore flow: configuration, the flow loop and
//! mesh utilities behind the `pwillmore` binary.

pub mod config;
pub mod driver;
pub mod error;

pub use config::{parse_config, ConfigLayer, RunConfig};
pub use driver::{format_g17, mesh_info, regularize_file, run_flow, StepRecord, CSV_HEADER};
pub use error::{CliError, Result};
