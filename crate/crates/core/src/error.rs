use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Step too coarse for the sine nonlinearity of the phase equation.
    #[error(
        "integration step too large: dt * rate = {phase_per_step:.4} rad per step (limit {limit})"
    )]
    StepSize { phase_per_step: f64, limit: f64 },

    #[error("quasi-static readout violated: IF content {if_hz:.1} Hz exceeds {limit_hz:.1} Hz")]
    QuasiStatic { if_hz: f64, limit_hz: f64 },

    #[error("density-matrix solve is singular (check decay and dephasing rates)")]
    SingularLiouvillian,

    #[error("no spectral peak above the floor in band [{lo} Hz, {hi} Hz]")]
    NoPeak { lo: f64, hi: f64 },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("power step {step} ({power_dbm} dBm): {source}")]
    Sweep {
        step: usize,
        power_dbm: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
