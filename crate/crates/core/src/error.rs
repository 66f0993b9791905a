use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}", describe_io(path, source))]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u64, message: String },

    #[error("schema error in {path}: {message}")]
    Schema { path: String, message: String },

    #[error("invalid data: {0}")]
    Validation(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("unknown site `{0}`")]
    UnknownSite(String),

    #[error("road network has no nodes")]
    EmptyNetwork,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("candidate pool of {pool} sites exceeds the exhaustive limit of {max_pool}")]
    PoolTooLarge { pool: usize, max_pool: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn describe_io(path: &std::path::Path, source: &std::io::Error) -> String {
    match source.kind() {
        std::io::ErrorKind::NotFound => format!("file not found: {}", path.display()),
        _ => format!("{}: {source}", path.display()),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by bad or missing user input, as opposed to
    /// failures while writing results.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            Error::Parse { .. }
            | Error::Schema { .. }
            | Error::Validation(_)
            | Error::UnknownNode(_)
            | Error::UnknownSite(_)
            | Error::EmptyNetwork
            | Error::InvalidArgument(_)
            | Error::Config(_) => true,
            Error::PoolTooLarge { .. } | Error::Json(_) => false,
        }
    }
}
