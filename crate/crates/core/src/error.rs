use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    SpecMismatch(String),

    #[error("non-finite value detected in {stage}")]
    NonFinite { stage: String },

    #[error("empty solid support: body {body} has no overlap with the grid")]
    EmptySolidSupport { body: usize },

    #[error("bodies {a} and {b} overlap (min φa+φb = {depth:.3e})")]
    BodyOverlap { a: usize, b: usize, depth: f64 },

    #[error("time step {dt} exceeds the diffusion stability limit {limit:.6e}")]
    Unstable { dt: f64, limit: f64 },

    #[error("scene line {line}: {message}")]
    Scene { line: usize, message: String },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {what}: {message}")]
    Parse { what: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn non_finite(stage: impl Into<String>) -> Self {
        Error::NonFinite {
            stage: stage.into(),
        }
    }
}
