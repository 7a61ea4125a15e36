use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unsupported gate: {0}")]
    GateSet(String),

    #[error("unbound parameter: {0}")]
    Binding(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("circuit not admitted by this engine: {0}")]
    Classification(String),

    #[error("unsupported basis: {0}")]
    Basis(String),

    #[error("input outside the declared domain: {0}")]
    Domain(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("non-adjacent two-qubit gate on ({0}, {1}); route with SWAPs first")]
    Routing(usize, usize),

    #[error("unsupported Majorana monomial degree {0} (must be 2 or 4)")]
    UnsupportedDegree(usize),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
