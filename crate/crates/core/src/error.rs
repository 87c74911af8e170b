use thiserror::Error;

/// Errors raised by the diagram engine, the numeric layer and the harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid diagram: {0}")]
    InvalidDiagram(String),

    #[error("mode mismatch: {0}")]
    Mode(String),

    #[error("rewrite precondition violated: {0}")]
    Rewrite(String),

    #[error("hessian is not positive definite (eigenvalue {eigenvalue:e})")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("point {point:?} is outside the sampling domain")]
    Domain { point: Vec<f64> },

    #[error("derivative of order {order} unavailable for {what} (max {max})")]
    MissingOrder {
        what: &'static str,
        order: usize,
        max: usize,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown instance `{0}`")]
    UnknownInstance(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
