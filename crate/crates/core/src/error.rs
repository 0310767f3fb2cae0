use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value encountered{}", at_time.map(|t| format!(" at t = {t}")).unwrap_or_default())]
    NonFinite { at_time: Option<f64> },

    #[error("CFL violation: courant number {courant:.4} exceeds 0.5 (dt = {dt}, u_max = {u_max})")]
    Cfl { courant: f64, dt: f64, u_max: f64 },

    #[error("step failed at t = {time}: {source}")]
    StepFailed {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("regression rejected: {0}")]
    Fit(String),

    #[error("inconsistent diagnostics: {0}")]
    Inconsistent(String),

    #[error("norm underflow: {0}")]
    Underflow(String),

    #[error("config error on line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that stem from bad user input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::GridMismatch(_)
                | Error::InvalidParameter(_)
                | Error::Config { .. }
                | Error::Snapshot(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
