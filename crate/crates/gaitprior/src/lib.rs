//! File formats, checkpoints, plots and the `gaitprior` command line on top
//! of [`gaitprior_core`].

pub mod checkpoint;
pub mod cli;
pub mod config;
mod error;
pub mod library;
pub mod logs;
pub mod plot;
pub mod sequence;

pub use error::{Error, Result};
