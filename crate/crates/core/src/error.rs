use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain where the quantity is defined.
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    /// Inconsistent or invalid configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {what} has length {got}, expected {expected}")]
    Shape {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    /// The solver produced a non-finite value.
    #[error("integration failure at t = {time}: {detail}")]
    Integration { time: f64, detail: String },

    /// Density dropped below the vacuum offset after a step.
    #[error("positivity failure at t = {time}: min rho = {min_rho} < floor {floor}")]
    Positivity { time: f64, min_rho: f64, floor: f64 },

    #[error("picard iterate left the band at iteration {iteration}: {detail}")]
    PicardBand { iteration: usize, detail: String },

    #[error(
        "picard iteration diverged after {iteration} iterations (last ratio {ratio}); retry with t1 = {suggested_t1}"
    )]
    PicardDivergence {
        iteration: usize,
        ratio: f64,
        suggested_t1: f64,
    },

    #[error("requested time {requested} is beyond the recorded horizon {horizon}")]
    Range { requested: f64, horizon: f64 },

    #[error("relaxation study failed: {0}")]
    Study(String),

    #[error("parse error in {path}: {detail}")]
    Parse { path: PathBuf, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
