//! File formats and subcommands of the `plm` binary.

pub mod commands;
pub mod error;
pub mod formats;

/// Version tag of the file formats, written at the top of every output.
pub const FORMAT_VERSION: &str = "plm-v1";

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (format plm-v1)");
