use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("regime error: {0}")]
    Regime(String),
    #[error("no sign change on [{lo}, {hi}]: {context}")]
    NoSignChange { lo: f64, hi: f64, context: String },
    #[error("inadmissible strategy: {0}")]
    Inadmissible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors caused by the inputs falling outside a solver's regime
    /// (as opposed to a numerical breakdown).
    pub fn is_regime(&self) -> bool {
        matches!(self, Error::Regime(_) | Error::NoSignChange { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
