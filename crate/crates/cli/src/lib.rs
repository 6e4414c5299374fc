//! File formats and command-line driver for the `treesurv-core` survival
//! model: longitudinal CSV ingestion, JSON model files, curve and C-index
//! tables, and the `train`/`predict`/`evaluate`/`simulate` commands.

pub mod commands;
pub mod csv_io;
pub mod error;
pub mod model_io;
pub mod report;

pub use commands::{run, Cli};
pub use error::{CliError, Result};
