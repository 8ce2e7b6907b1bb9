use thiserror::Error;

/// Errors shared by all solver modules.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A parameter violated a documented precondition.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A numerical routine failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// An input value lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A tabulated object does not cover the requested range.
    #[error("range error: {0}")]
    Range(String),

    /// The simulated solution exceeded the blow-up guard.
    #[error("finite-time blow-up suspected: sup|u| grew past {guard:.3e} at t = {t:.6e}")]
    BlowUp { t: f64, guard: f64 },
}

pub type Result<T> = std::result::Result<T, CoreError>;
