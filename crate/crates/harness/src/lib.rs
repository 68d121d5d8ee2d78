//! Virtual experiments, report writers and the command-line harness built
//! on the `cablearm` model crate.

pub mod cli;
pub mod commands;
pub mod decoupling;
pub mod error;
pub mod repeatability;
pub mod report;
pub mod svg;
pub mod trajectory;
pub mod workspace;

pub use cli::run;
pub use error::{HarnessError, Result};
pub use report::{from_json, to_json, Report, SCHEMA_VERSION};
