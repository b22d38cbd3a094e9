use std::path::PathBuf;

/// Errors raised by the simulation library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("inadmissible density matrix: {0}")]
    InadmissibleDensity(String),

    #[error("{what} did not converge (last residual {residual:.3e})")]
    NotConverged { what: String, residual: f64 },

    #[error("velocity grid incompatible with the operator grid: {0}")]
    VelocityGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fock space: {0}")]
    Fock(String),

    #[error("configuration invalid:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("at {point}: {source}")]
    Sweep {
        point: String,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
