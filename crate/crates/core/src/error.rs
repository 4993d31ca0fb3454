use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown problem `{name}`, valid names: {valid}")]
    UnknownProblem { name: String, valid: String },
    #[error("unsupported degree {degree} for {family} points")]
    UnsupportedDegree { family: String, degree: usize },
    #[error("time {t} outside horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("problem has no reference solution")]
    MissingReference,
    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
