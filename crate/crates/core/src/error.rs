use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller supplied an out-of-range index, shape or parameter.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The latent model produces a nonpositive intensity or otherwise breaks
    /// the model contract.
    #[error("model validity: {0}")]
    ModelValidity(String),

    /// Malformed input records (event streams, containers, configs on disk).
    #[error("data error: {0}")]
    Data(String),

    /// Iterative numerics failed to converge or hit a singular matrix.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A matrix that must have full rank does not.
    #[error("rank deficiency: {0}")]
    RankDeficient(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Data(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Data(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Config(e.to_string())
    }
}
