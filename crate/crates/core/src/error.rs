use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid local dimension {0}: every subsystem needs at least two levels")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("subsystem index {index} out of range for a space with {len} subsystems")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("operands live on different Hilbert spaces ({left:?} vs {right:?})")]
    SpaceMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("negative damping rate {rate} on channel `{channel}`")]
    NegativeRate { channel: String, rate: f64 },

    #[error("invalid drive schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid integrator configuration: {0}")]
    InvalidIntegrator(String),

    #[error("not a density matrix: {0}")]
    NotPhysical(String),

    #[error("integration diverged at t = {time:.6e} s: |Tr rho - 1| = {trace_error:.3e}")]
    IntegrationDiverged { time: f64, trace_error: f64 },

    #[error("positivity violated at t = {time:.6e} s: smallest eigenvalue {min_eigenvalue:.3e}")]
    PositivityViolation { time: f64, min_eigenvalue: f64 },

    #[error("total dimension {dim} exceeds the limit of {limit} for this method")]
    DimensionGuard { dim: usize, limit: usize },

    #[error("steady state is not unique or could not be isolated (relative residual {residual:.3e})")]
    DegenerateSteadyState { residual: f64 },

    #[error("conversion efficiency is undefined for a zero drive amplitude")]
    UndefinedEfficiency,

    #[error("averaging window {window:.3e} s is longer than the trajectory ({span:.3e} s)")]
    WindowTooLong { window: f64, span: f64 },

    #[error("sweep error: {0}")]
    Sweep(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("unknown figure kind `{0}` (expected `timeseries` or `efficiency`)")]
    UnknownFigureKind(String),

    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for failures of the numerical engine (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IntegrationDiverged { .. }
                | Error::PositivityViolation { .. }
                | Error::DegenerateSteadyState { .. }
        )
    }
}
