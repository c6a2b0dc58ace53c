use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(
        "Picard iteration did not converge after {iterations} iterations (last residual {last:e})"
    )]
    NoConvergence {
        iterations: usize,
        last: f64,
        residuals: Vec<f64>,
    },

    #[error(
        "time window {requested} exceeds the contraction window {limit}; use a smaller t_final"
    )]
    WindowTooLarge { requested: f64, limit: f64 },

    #[error("blow-up guard tripped at t = {t}: sup norm {sup:e}")]
    BlowUp { t: f64, sup: f64 },

    #[error("root find failed: {0}")]
    RootFind(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
