use thiserror::Error;

/// Errors produced by the numerical routines and the data pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("degenerate cost rates: mean(g) + mean(l) must be positive")]
    DegenerateCost,

    #[error("unsupported risk measure: {0}")]
    UnsupportedMeasure(String),

    #[error("infeasible linear program: {0}")]
    Infeasible(String),

    #[error("missing paired VaR forecast for record {0}")]
    Pairing(usize),

    #[error("split {0} contains no out-of-sample records")]
    EmptySplit(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::Dimension { expected, got })
        }
    }
}
