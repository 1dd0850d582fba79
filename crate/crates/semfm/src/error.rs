use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    MeshParse { line: usize, message: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge: requested {requested} pairs, achieved {achieved}")]
    EigensolverNonConvergence { requested: usize, achieved: usize },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("descriptor column {column} is an empty anchor region")]
    EmptyAnchorRegion { column: usize },

    #[error("k-means produced an empty cluster even after re-seeding")]
    EmptyCluster,

    #[error("unsupported problem size: {0}")]
    UnsupportedSize(String),

    #[error("transferred region is empty: {0}")]
    EmptyTransfer(String),

    #[error("mesh id mismatch: `{a}` vs `{b}`")]
    MeshIdMismatch { a: String, b: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {message}")]
    JsonFile { path: PathBuf, message: String },

    #[error("bad cache file: {0}")]
    CacheFormat(String),
}

impl Error {
    /// Process exit code for the CLI: 2 for usage/input problems, 1 for
    /// internal or numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MeshParse { .. }
            | Error::InvalidMesh(_)
            | Error::InvalidArgument(_)
            | Error::UnsupportedSize(_)
            | Error::MeshIdMismatch { .. }
            | Error::Io { .. }
            | Error::JsonFile { .. }
            | Error::CacheFormat(_) => 2,
            Error::EigensolverNonConvergence { .. }
            | Error::SingularSystem(_)
            | Error::EmptyAnchorRegion { .. }
            | Error::EmptyCluster
            | Error::EmptyTransfer(_) => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
