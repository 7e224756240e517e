use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("query range {range} exceeds half box side {half}")]
    RangeTooLarge { range: f64, half: f64 },

    #[error("duplicate point at {0:?}")]
    DuplicatePoint(Vec<f64>),

    #[error("unknown point id {0}")]
    UnknownId(usize),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("configuration of size {size} exceeds exact-enumeration cap {max}")]
    TooLarge { size: usize, max: usize },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("monte carlo standard error {se} exceeds tolerance {tol}")]
    ToleranceUnmet { se: f64, tol: f64 },

    #[error("degenerate statistics: {0}")]
    Degenerate(String),

    #[error("internal consistency violation: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
