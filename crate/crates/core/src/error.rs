use thiserror::Error;

/// Errors produced by the statistical primitives, randomizers and tests.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Matrix too close to singular; `ratio` is smallest / largest eigenvalue.
    #[error("singular matrix: eigenvalue ratio {ratio:.3e} below floor {floor:.0e}")]
    SingularMatrix { ratio: f64, floor: f64 },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("optimization failed after {iterations} iterations: {reason}")]
    OptimizationFailure { iterations: usize, reason: String },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
