use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate corner (x, gamma) = ({x}, {gamma}): K-factor bracket vanishes")]
    DegenerateCorner { x: f64, gamma: f64 },

    #[error("quadrature did not reach tolerance: estimated error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("root not bracketed on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("moment undefined: {0}")]
    MomentUndefined(&'static str),

    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },

    #[error("invalid design: {0}")]
    Design(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("validation error at row {row}: {msg}")]
    Validation { row: usize, msg: String },

    #[error("unsupported file version {found} (expected {expected})")]
    UnsupportedVersion { found: String, expected: String },

    #[error("missing table cell: {0}")]
    MissingCell(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
