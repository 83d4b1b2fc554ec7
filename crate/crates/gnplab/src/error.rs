//! Error taxonomy shared by the whole crate.

/// Everything that can go wrong below the CLI layer.
///
/// The three non-IO variants map onto the CLI exit-code contract: they all
/// signal misuse of an interface (exit code 2) rather than a failed
/// computation (exit code 1).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A numeric argument lies outside the domain an operation supports.
    #[error("parameter out of domain: {0}")]
    ParamDomain(String),

    /// A run configuration is missing, inconsistent, or out of range.
    #[error("configuration error: {0}")]
    Config(String),

    /// Structured input (edge lists, vertex ids) failed validation.
    #[error("input error: {0}")]
    Input(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
