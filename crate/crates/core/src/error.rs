use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I_r({x}) overflows; use the scaled form")]
    BesselOverflow { x: f64 },

    #[error("sample is empty")]
    EmptySample,

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid sizes differ: {left} vs {right}")]
    GridMismatch { left: usize, right: usize },

    #[error("unknown model id `{0}`")]
    UnknownModel(String),

    #[error("reference table line {line}: {message}")]
    ReferenceParse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
