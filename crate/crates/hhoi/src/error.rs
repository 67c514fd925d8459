//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("validation: {0}")]
    Validation(String),

    /// The two 3-vectors of a 6D rotation are parallel or zero.
    #[error("degenerate 6d rotation (separation angle {angle:.3e} rad)")]
    DegenerateRotation { angle: f64 },

    #[error("non-finite value during training (epoch {epoch}, step {step})")]
    NonFiniteTraining { epoch: usize, step: usize },

    #[error("non-finite state during sampling (sample {sample}, t = {t:.6})")]
    NonFiniteSample { sample: usize, t: f64 },

    #[error("non-finite state during integration (step {step}, t = {t:.6})")]
    NonFiniteIntegration { step: usize, t: f64 },

    #[error("hhi graph: {0}")]
    Graph(#[from] GraphError),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

/// Violations of the HHI edge-graph contract.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("circular dependency through humans {0:?}")]
    Cycle(Vec<usize>),

    #[error("duplicate relation between humans {a} and {b}")]
    DuplicatePair { a: usize, b: usize },

    #[error("human {0} related to itself")]
    SelfEdge(usize),

    #[error("human index {index} out of range (scene has {n} humans)")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("{m} relations exceed the maximum {max} for {n} humans")]
    TooManyEdges { m: usize, max: usize, n: usize },
}
