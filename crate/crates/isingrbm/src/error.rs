use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("missing ground-truth sidecar for: {}", .0.join(", "))]
    MissingGroundTruth(Vec<String>),

    #[error("no instances found in {0}")]
    EmptyCorpus(PathBuf),

    #[error("{0}")]
    Infeasible(String),

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] isingrbm_core::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Infeasible(_) => 4,
            Error::Core(isingrbm_core::Error::InvalidParameter { .. }) => 2,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
