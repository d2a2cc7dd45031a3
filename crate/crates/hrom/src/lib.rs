//! File formats, case configuration, staged pipelines and the command-line
//! driver on top of [`hrom_core`].

pub mod config;
pub mod error;
pub mod gram;
pub mod io;
pub mod pipeline;
pub mod store;

pub use config::CaseConfig;
pub use error::{CliError, Result};
pub use pipeline::{Emit, RunOptions};
