//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cell cap exceeded: {requested} cells at level {level} (cap {cap})")]
    CapExceeded {
        level: usize,
        requested: u128,
        cap: u64,
    },

    #[error("letter {letter} out of range for alphabet size {k}")]
    InvalidLetter { letter: u8, k: usize },

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("invalid ifs: {0}")]
    InvalidIfs(String),

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error("period overlap: scaled support {extent} must stay below 1/2")]
    PeriodOverlap { extent: f64 },

    #[error("reflection overlap: scaled support {extent} must stay below 1")]
    ReflectionOverlap { extent: f64 },

    #[error("kernel moment constraint violated: {0}")]
    MomentConstraint(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("edge probability out of [0,1] at ({row},{col}): {value}")]
    ProbabilityRange {
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("time step {dt} exceeds stability guard {guard}")]
    StabilityGuard { dt: f64, guard: f64 },

    #[error("non-finite state encountered; last valid time {t}")]
    NonFiniteState { t: f64 },

    #[error("non-finite value: {0}")]
    NonFiniteValue(String),

    #[error("root solve failed: {0}")]
    RootSolveFailed(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
