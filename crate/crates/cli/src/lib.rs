//! Command-line front end: bound reports, figure datasets, parameter sweeps
//! and a self-test of the closed forms.

pub mod app;
pub mod config;
pub mod error;
pub mod eval;
pub mod figures;
pub mod selftest;
pub mod sweep;
pub mod table;

pub use app::run;
pub use error::{CliError, CliResult};
