//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by signal algebra, element evaluation and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Signals with mismatched sample count or period were combined.
    #[error("shape mismatch: expected {expected_len} samples over T={expected_period}, got {actual_len} over T={actual_period}")]
    ShapeMismatch {
        expected_len: usize,
        expected_period: f64,
        actual_len: usize,
        actual_period: f64,
    },

    /// A signal or grid parameter violates its construction invariants.
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    /// An element was evaluated outside the domain of its device law.
    #[error("{element}: input {value} at sample {sample} outside domain {domain}")]
    DomainViolation {
        element: String,
        sample: usize,
        value: f64,
        domain: String,
    },

    /// The requested operation is not defined for this element.
    #[error("unsupported for {element}: {operation}")]
    Unsupported { element: String, operation: String },

    /// A dense factorization failed or the matrix is numerically singular.
    #[error("singular system (reciprocal condition estimate {rcond:.3e}): {context}")]
    Singular { rcond: f64, context: String },

    /// Guarded Newton could not bracket a sign change.
    #[error("root bracketing failed after {expansions} expansions, residual {residual:.3e}")]
    BracketingFailure { expansions: u32, residual: f64 },

    /// A state trajectory left its declared box domain.
    #[error("state component {component} left its domain by {excess:.3e} at t={time}")]
    StateDomain {
        component: usize,
        excess: f64,
        time: f64,
    },

    /// The circuit structure does not fit the requested solver.
    #[error("structure: {0}")]
    Structure(String),

    /// Netlist text could not be parsed.
    #[error("parse error at {line}:{col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },

    /// An inner solve inside residual evaluation failed.
    #[error("inner solve at {path} failed: {source}")]
    InnerSolve {
        path: String,
        #[source]
        source: Box<Error>,
    },

    /// Input collection was empty where at least one entry is required.
    #[error("empty input: {0}")]
    Empty(String),

    /// File I/O failed.
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
