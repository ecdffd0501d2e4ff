use thiserror::Error;

/// Errors raised while configuring or running a solver.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration. `field` names the offending parameter.
    #[error("invalid `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// A Runge-Kutta stage produced a non-finite value.
    #[error("numerical divergence in RK stage {stage} at t = {time}")]
    Divergence { stage: usize, time: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
