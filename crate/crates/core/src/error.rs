use thiserror::Error;

use crate::binary_core::Diagnostic;

/// Errors shared across the workbench modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid core presentation: {0:?}")]
    InvalidCore(Vec<Diagnostic>),

    #[error("unknown orbital `{0}`")]
    UnknownOrbital(String),

    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("incoherent labels: {0}")]
    IncoherentLabels(String),

    #[error("formula parse error at byte {at}: {message}")]
    FormulaParse { at: usize, message: String },

    #[error("{what} cap exceeded: requested {requested}, limit {limit}")]
    CapExceeded {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("coordinate {index} out of range for arity {arity}")]
    CoordinateOutOfRange { index: usize, arity: usize },

    #[error("instance is not (2,l)-minimal: {0}")]
    NotMinimal(String),

    #[error("instance entails equalities on pair ({0}, {1}); quotient equal variables first")]
    EntailsEqualities(String, String),

    #[error("descriptors are not composable: {0}")]
    NotComposable(String),

    #[error("narrowing precondition violated: {0}")]
    NarrowPrecondition(String),

    #[error("implication postcondition failed: {0}")]
    ImplicationPostcondition(String),

    #[error("completion procedure exceeded iteration cap ({cap}): {residual}")]
    CompletionCap { cap: usize, residual: String },

    #[error("synthesis precondition degraded: {0}")]
    SynthesisDegraded(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
