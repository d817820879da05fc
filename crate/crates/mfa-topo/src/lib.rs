//! File formats, a work-stealing executor and the `mfa-topo` command-line
//! tool on top of [`mfa_topo_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod parallel;

pub use error::{CliError, Result};
pub use parallel::RayonExecutor;
