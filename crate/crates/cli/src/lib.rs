//! Batch driver: a run configuration in, deterministic reports out.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::Serialize;
use waveguide_spectra::Error;

pub mod config;
pub mod output;
mod tasks;

pub use config::{Format, GeometryConfig, Params, Resolved, RunConfig, Task};
pub use output::{Artifact, Cell, Table};
pub use tasks::execute;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;

/// Environment variable holding the worker thread count.
pub const THREADS_VAR: &str = "WAVEGUIDE_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: String) -> Self {
        Self {
            code: EXIT_CONFIG,
            message,
        }
    }

    pub fn io(message: String) -> Self {
        Self {
            code: EXIT_FAILURE,
            message,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_)
            | Error::DimensionMismatch { .. }
            | Error::Geometry(_)
            | Error::Constraint { .. } => EXIT_CONFIG,
            Error::DegenerateMode { .. } => EXIT_DEGENERATE,
            Error::NoConvergence { .. } | Error::Factorization(_) => EXIT_NO_CONVERGENCE,
            _ => EXIT_FAILURE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a Resolved,
    outputs: Vec<&'a str>,
    threads: usize,
    wall_time_s: f64,
}

/// Writes the artifacts and `manifest.json` into `dir`.
pub fn write_outputs(dir: &Path, resolved: &Resolved, artifacts: &[Artifact], wall_time_s: f64) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(format!("{}: {e}", dir.display())))?;
    for a in artifacts {
        let path = dir.join(&a.file);
        fs::write(&path, &a.contents).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    }
    let manifest = Artifact::json(
        "manifest",
        &Manifest {
            tool: "wgspec",
            version: env!("CARGO_PKG_VERSION"),
            config: resolved,
            outputs: artifacts.iter().map(|a| a.file.as_str()).collect(),
            threads: rayon::current_num_threads(),
            wall_time_s,
        },
    );
    let path = dir.join(&manifest.file);
    fs::write(&path, manifest.contents).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}
