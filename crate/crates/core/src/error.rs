use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: fields live on different grids")]
    GridMismatch,
    #[error("representation mismatch: {0}")]
    Representation(&'static str),
    #[error("charge profile violates neutrality: profile(0) = {0}")]
    NotNeutral(f64),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("degenerate denominator I + kappa = {0:e}")]
    Degenerate(f64),
    #[error("wrap-around: {0}")]
    WrapAround(String),
    #[error("frequency mismatch: soliton omega {soliton} vs limit frequency {expected}")]
    FrequencyMismatch { soliton: f64, expected: f64 },
    #[error("fit error: {0}")]
    Fit(String),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("support violation: {0}")]
    Support(String),
    #[error("under-sampled time series: {0}")]
    UnderSampled(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
