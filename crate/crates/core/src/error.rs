use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate DNN profile: {0}")]
    DegenerateProfile(String),
    #[error("cooperation never reduces computing demand (2δ − δ̃ = {0} cycles)")]
    NonPositiveSavings(f64),
    #[error("shared workload {workload} exceeds the cap W_M = {cap}")]
    WorkloadExceedsCap { workload: f64, cap: f64 },
    #[error("transmitter-receiver distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("available bandwidth must be positive, got {0} Hz")]
    ZeroBandwidth(f64),
    #[error("frequency {freq} Hz of pair {pair} is at or below the domain floor {floor} Hz")]
    DomainViolation { pair: usize, freq: f64, floor: f64 },
    #[error("dual bisection stalled after {iterations} iterations (h = {h})")]
    BisectionStall { iterations: usize, h: f64 },
    #[error("solver requires a nonempty cooperative set")]
    EmptyCooperativeSet,

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("parse error in {path} at row {row}: {msg}")]
    Parse { path: PathBuf, row: usize, msg: String },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("time column is not monotone at row {row}")]
    NonMonotoneTime { row: usize },

    #[error("trace has no slots")]
    EmptyTrace,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("episode is done")]
    EpisodeDone,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shape mismatch between primary and target networks")]
    ShapeMismatch,
    #[error("replay buffer holds {have} transitions, batch needs {need}")]
    BufferUnderflow { have: usize, need: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("brute-force search supports at most 20 pairs, got {0}")]
    TooManyPairs(usize),
    #[error("no data to aggregate")]
    NoData,

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by user-supplied configuration or input files.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::ConfigInvalid(_)
                | Error::DegenerateProfile(_)
                | Error::NonPositiveSavings(_)
                | Error::Parse { .. }
                | Error::SchemaMismatch(_)
                | Error::NonMonotoneTime { .. }
                | Error::Json(_)
        )
    }
}
