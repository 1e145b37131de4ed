//! Benchmark harness for the identification algorithms: experiment
//! configuration, replication runner, and CSV emission.
//!
//! The binary in this crate wires these pieces to a CLI; everything lives in
//! the library so integration tests can drive experiments directly.

pub mod config;
pub mod emit;
pub mod runner;

/// Harness-level failures, classified for exit codes: configuration problems
/// exit 2, a sweep where every run failed exits 3, everything else exits 1.
#[derive(Debug)]
pub enum BenchError {
    Config(String),
    AllRunsFailed,
    Other(anyhow::Error),
}

impl std::fmt::Display for BenchError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BenchError::Config(msg) => write!(f, "configuration error: {msg}"),
            BenchError::AllRunsFailed => write!(f, "all runs failed"),
            BenchError::Other(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for BenchError {}

impl From<anyhow::Error> for BenchError {
    fn from(e: anyhow::Error) -> Self {
        BenchError::Other(e)
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Other(e.into())
    }
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::AllRunsFailed => 3,
            BenchError::Other(_) => 1,
        }
    }
}

pub type BenchResult<T> = std::result::Result<T, BenchError>;
