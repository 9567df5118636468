use thiserror::Error;

use crate::model::CompartmentId;

/// Reasons an analysis refuses a model.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("model has no inputs")]
    NoInputs,
    #[error("model is not strongly connected")]
    NotStronglyConnected,
    #[error("model is not a bidirectional tree")]
    NotATree,
    #[error("expected exactly one input and one output")]
    NotSingleInOut,
    #[error("compartment {0} is not an input")]
    NotAnInput(CompartmentId),
    #[error("compartment {0} is not an output")]
    NotAnOutput(CompartmentId),
    #[error("compartment {0} out of range")]
    OutOfRange(CompartmentId),
    #[error("precondition violated: {0}")]
    Precondition(String),
}
