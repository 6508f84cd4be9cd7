use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("tortoise inversion did not converge for r* = {r_star} after {iterations} iterations")]
    NoConvergence { r_star: f64, iterations: usize },

    #[error("invalid initial data: {0}")]
    InitialData(String),

    #[error("CFL violation: dt = {dt} exceeds {limit} (cfl cap {cfl} times dr* = {dr})")]
    Cfl { dt: f64, limit: f64, cfl: f64, dr: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("missing time level: {0}")]
    MissingTimeLevel(String),

    #[error("config error: key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
