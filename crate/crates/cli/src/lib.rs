//! Command-line driver: corpus ingest, factorization, topic tables,
//! benchmarks and dataset download.

pub mod commands;
pub mod datasets;
pub mod error;
pub mod manifest;
pub mod topics;

pub use commands::{execute, run, Cli};
pub use error::{CliError, CliResult};
