use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // matrix validation
    #[error("matrix must have at least 2 vertices, got {0}")]
    TooSmall(usize),
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("entry ({row}, {col}) is not a finite number")]
    NotFinite { row: usize, col: usize },
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} of W^T sums to {sum}, expected 1")]
    NotStochastic { row: usize, sum: f64 },
    #[error("row {row} of W^T sums to {sum} > 1")]
    RowSumExceedsOne { row: usize, sum: f64 },
    #[error("generalized mode requires at least one row of W^T summing to less than 1")]
    NoForcingInput,
    #[error("declared vertex count {declared} does not match matrix size {actual}")]
    SizeMismatch { declared: usize, actual: usize },

    // spectral
    #[error("interaction matrix is reducible; run condensation and analyse each recurrent block")]
    Reducible,
    #[error("edge {from} -> {to} violates the cyclic class structure for period {period}")]
    InconsistentPeriod { from: usize, to: usize, period: usize },
    #[error("Perron iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("operation requires a stochastic (W^T 1 = 1) interaction matrix")]
    RequiresStochastic,
    #[error("operation requires a generalized (forcing input) interaction matrix")]
    RequiresGeneralized,
    #[error("vector has length {actual}, expected {expected}")]
    DimensionMismatch { expected: usize, actual: usize },

    // schedules
    #[error("invalid schedule parameter: {0}")]
    InvalidParam(String),
    #[error("custom schedules must declare summability flags")]
    MissingFlags,
    #[error("schedule defines r_n only for n < {available}, but {required} terms are needed")]
    ScheduleTooShort { available: usize, required: usize },

    // dynamics
    #[error("success probability {value} for vertex {vertex} at step {step} lies outside [0, 1]")]
    ProbabilityOutOfRange { step: usize, vertex: usize, value: f64 },
    #[error("initial inclination {value} for vertex {vertex} lies outside [0, 1]")]
    InvalidInitialState { vertex: usize, value: f64 },
    #[error("normalizing product underflowed below 1e-300 at step {index}")]
    DegenerateProduct { index: usize },
    #[error("the reinforcement sequence must be summable-flagged infinite for this operation")]
    RequiresDivergentSchedule,

    // regime
    #[error("inconsistent summability flags: sum r_n finite but sum r_n(1-r_n) infinite")]
    InconsistentFlags,

    // harness
    #[error("invalid ensemble configuration: {0}")]
    InvalidConfig(String),
    #[error("statistic `{0}` was not recorded by this configuration")]
    MissingDiagnostic(String),
    #[error("exact enumeration needs N*H <= {limit}, got {actual}")]
    TooLarge { actual: usize, limit: usize },
}
