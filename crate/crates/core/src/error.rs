use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("t = {t} lies outside the protocol window [{start}, {end}]")]
    Domain { t: f64, start: f64, end: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("counterdiabatic frequency is negative: Omega^2 = {value:e} at t = {t}")]
    Validity { t: f64, value: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("accuracy target missed for {what}: best value {value:e}, error bound {bound:e}")]
    Accuracy { what: String, value: f64, bound: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("off-basis residual {residual:e} exceeds {limit:e}")]
    Decomposition { residual: f64, limit: f64 },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
