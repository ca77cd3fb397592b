use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The plant state left the finite domain.
    #[error("numerical blow-up at t = {t_ms:.3} ms (state {state:?})")]
    NumericalBlowUp { t_ms: f64, state: Vec<f64> },

    #[error("time went backwards: {from_us} us -> {to_us} us")]
    TimeRegression { from_us: u64, to_us: u64 },

    #[error("scenario parse error at `{key}`: {message}")]
    Parse { key: String, message: String },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
