use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid device parameters: {0}")]
    InvalidParams(String),

    #[error("invalid pulse: amplitude {amplitude} V, duration {duration} s")]
    InvalidPulse { amplitude: f64, duration: f64 },

    #[error("time step {dt} s violates the resolution floor of {floor} s")]
    ResolutionFloor { dt: f64, floor: f64 },

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("equilibrium solve did not converge after {iterations} iterations (residual {residual:e} A)")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("epoch {epoch}, sample {sample}: {source}")]
    Training {
        epoch: usize,
        sample: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid training config: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: {left} predictions vs {right} targets")]
    LengthMismatch { left: usize, right: usize },

    #[error("line {line}: malformed row ({reason})")]
    MalformedRow { line: usize, reason: String },

    #[error("line {line}: unknown label {label}")]
    UnknownLabel { line: usize, label: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
