use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("accuracy target missed: {0}")]
    Accuracy(String),
    #[error("CFL violation: {cfl:.3} > cap, suggested dt {suggested_dt:.3e}")]
    Cfl { cfl: f64, suggested_dt: f64 },
    #[error("fixed-point iteration diverged: {0}")]
    Divergence(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("window error: {0}")]
    Window(String),
    #[error("snapshot format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
