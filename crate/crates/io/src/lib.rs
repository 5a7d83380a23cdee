//! File formats and run drivers for lattice-skin models.
//!
//! - [`config`]: the TOML run configuration and its validation,
//! - [`build`]: turning a configuration into a solvable [`Structure`]
//!   (lattice generation, support/load resolution, shell meshing,
//!   attachment),
//! - [`lattice_file`]: an exact, byte-stable lattice interchange format,
//! - [`vis`]: legacy-VTK exports of lattices and shells,
//! - [`export`]: CSV histories, area histograms and text reports,
//! - [`run`]: one driver per CLI subcommand, writing all artifacts.
//!
//! Every writer formats floats in scientific notation with 17 significant
//! digits and iterates collections in index order, so outputs are
//! byte-identical across runs and thread counts.
//!
//! [`Structure`]: lattice_skin_core::model::Structure

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod build;
pub mod config;
pub mod export;
pub mod lattice_file;
pub mod run;
pub mod vis;

/// Errors split by exit code: configuration problems abort before any
/// solve, solver problems occur after the configuration was accepted.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{0}")]
    Solver(lattice_skin_core::Error),
}

impl IoError {
    pub fn config(msg: impl Into<String>) -> IoError {
        IoError::Config(msg.into())
    }

    /// Process exit code: 1 for config and file problems, 2 for solver
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            IoError::Solver(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, IoError>;

/// Scientific notation with 17 significant digits; parses back to the
/// identical f64, so files round-trip exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| IoError::File { path: path.into(), source })
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| IoError::File { path: path.into(), source })
}
