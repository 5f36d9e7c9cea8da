use std::path::PathBuf;

use thiserror::Error;

/// Failures of the geometry, IO and pipeline layers. Each maps to one
/// process exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing artifact {path}; run the `{stage}` stage first")]
    MissingArtifact { stage: &'static str, path: PathBuf },
    #[error("numerical failure: {0}")]
    Numerical(#[from] urbanform_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Io { .. } | Error::MissingArtifact { .. } => 3,
            Error::Numerical(e) => match e {
                urbanform_core::Error::SchemaMismatch { .. }
                | urbanform_core::Error::EmptyInput(_)
                | urbanform_core::Error::UnknownCell(_)
                | urbanform_core::Error::DimensionMismatch { .. } => 3,
                _ => 4,
            },
        }
    }
}
