//! File formats, the experiment harness and the `copeland` command line on
//! top of [`copeland_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod io;
pub mod spec;

pub use error::{Error, ErrorKind, Result};
