//! Error type shared across the solver library.

use thiserror::Error;

/// Errors surfaced by the numerics, prox, engine and certification layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("matrix is not symmetric within tolerance: {context}")]
    NotSymmetric { context: String },

    #[error("matrix is not positive definite (Cholesky breakdown at pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("non-finite value encountered: {context}")]
    NonFinite { context: String },

    #[error("invalid parameter: {context}")]
    InvalidParameter { context: String },

    #[error(
        "proximal-step condition violated on the {side} block: \
         lambda*lambda_{side} = {provided:.6e} but ||{matrix}' L {matrix}|| = {measured:.6e}"
    )]
    StepConditionViolated {
        side: &'static str,
        matrix: &'static str,
        provided: f64,
        measured: f64,
    },

    #[error("inner splitting loop did not converge within {iterations} iterations (last objective change {last_change:.3e})")]
    InnerLoopNoConvergence { iterations: usize, last_change: f64 },

    #[error("prox evaluation failed at iteration {iteration}: {source}")]
    ProxFailure {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(
        "approximate prox objective is below the reference by {gap:.3e}; \
         the exact reference point is wrong"
    )]
    WrongReference { gap: f64 },

    #[error("operation requires shadow-mode trace data: {context}")]
    MissingShadowData { context: String },

    #[error("reference pair is infeasible: ||Ax + Bz - c|| = {residual:.3e}")]
    InfeasiblePair { residual: f64 },

    #[error("series length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

impl Error {
    pub(crate) fn dims(context: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
        }
    }

    pub(crate) fn param(context: impl Into<String>) -> Self {
        Error::InvalidParameter {
            context: context.into(),
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::ProxFailure {
            iteration,
            source: Box::new(self),
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
