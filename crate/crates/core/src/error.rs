use thiserror::Error;

/// Errors surfaced by the simulation and post-processing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value {value} outside open interval ({lo}, {hi})")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("buffer not full: have {have} of {want} columns")]
    BufferNotFull { have: usize, want: usize },

    #[error("input too short: need at least {need} bits, got {got}")]
    InsufficientLength { need: usize, got: usize },

    #[error("constant sequence has zero variance")]
    ZeroVariance,

    #[error("quadrature error estimate {estimate:.3e} exceeds {limit:.3e} per bin")]
    QuadratureResolution { estimate: f64, limit: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
