//! File formats, experiment orchestration and reporting around
//! [`robust_qbc_core`].
//!
//! The `robust-qbc` binary exposes three subcommands:
//!
//! * `synth` writes the two-Gaussian benchmark in LIBSVM format;
//! * `run` executes a manifest (see [`config`]) and writes `trajectories.csv`;
//! * `report` aggregates trajectories into per-iteration means and
//!   standard deviations.

pub mod commands;
pub mod config;
pub mod error;
pub mod libsvm;
pub mod pca_cache;
pub mod trajectories;

pub use error::{CliError, Result};
