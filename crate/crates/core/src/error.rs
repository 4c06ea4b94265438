use std::path::PathBuf;

use thiserror::Error;

/// Where a configuration value came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    File { path: PathBuf, line: Option<usize> },
    Flag(String),
    Default,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::File { path, line: Some(line) } => write!(f, "{}:{}", path.display(), line),
            Provenance::File { path, line: None } => write!(f, "{}", path.display()),
            Provenance::Flag(name) => write!(f, "flag --{name}"),
            Provenance::Default => write!(f, "default"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("gate rejected experiment: {0}")]
    Gate(String),

    #[error("config error at {provenance}: key `{key}`: {message}")]
    Config {
        key: String,
        message: String,
        provenance: Provenance,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("validation failed: {0}")]
    Validation(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the `spindle` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Gate(_) => 2,
            Error::Domain(_)
            | Error::Degenerate(_)
            | Error::Infeasible(_)
            | Error::Hypothesis(_)
            | Error::Validation(_) => 3,
            Error::Io { .. } => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
