//! Scenario runner, verification suite and mesh export for `isogauge`.

pub mod error;
pub mod gallery;
pub mod io;
pub mod report;
pub mod scenario;
pub mod suite;
pub mod tolerances;

pub use error::{CliError, CliResult};
pub use report::Report;
