use thiserror::Error;

/// Library error type. Contract violations that indicate caller bugs
/// (out-of-range arm indices, mismatched lengths) panic instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("statistic undefined for arm {arm}: no observations")]
    UndefinedStatistic { arm: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parameter {name} diverged to {value:.3e} (bound {bound:.1e})")]
    Diverged {
        name: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("csv load failed at line {line}: {message}")]
    CsvLoad { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
