//! File formats, experiment configuration and the `metaplectic` command line
//! on top of [`metaplectic_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod plot;
pub mod verify;

pub use commands::{run, Cli, Outcome};
pub use error::{CliError, Result};
