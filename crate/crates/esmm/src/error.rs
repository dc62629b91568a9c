use thiserror::Error;

/// Failure modes of primitive-variable recovery for a single state.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecoveryError {
    #[error("primitive recovery did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("unphysical state: {reason}")]
    Unphysical { reason: String },
}

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("recovery failed at node {node:?}: {source}")]
    Recovery {
        node: [usize; 3],
        #[source]
        source: RecoveryError,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),
    #[error("non-positive Jacobian {value} at node {node:?}")]
    NonPositiveJacobian { node: [usize; 3], value: f64 },
    #[error("positivity watchdog tripped at t = {time}: {detail}")]
    Positivity { time: f64, detail: String },
    #[error("time step collapsed: {0}")]
    TimeStep(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed dump: {0}")]
    Format(String),
}

impl Error {
    /// True for errors caused by user input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Unsupported(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
