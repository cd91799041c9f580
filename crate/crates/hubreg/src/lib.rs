//! File formats, experiment harness and command line for `hubreg-core`.

pub mod bundle;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;

pub use error::{AppError, Result};
