use thiserror::Error;

use crate::scalar::Scalar;
use crate::subproblem::DirectionSolution;

#[derive(Debug, Clone, Error)]
pub enum Error<T: Scalar = f64> {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    /// The Frank–Wolfe dual solver ran out of iterations before certifying
    /// its duality gap. The best iterate found is attached.
    #[error("subproblem not certified after {} inner iterations: gap {gap:e} > {limit:e}", best.inner_iters)]
    NonCertified {
        gap: T,
        limit: T,
        best: Box<DirectionSolution<T>>,
    },

    #[error("Armijo line search failed after {halvings} halvings")]
    LineSearchFailure { halvings: usize },

    #[error("smoothness backtracking failed after {rounds} rounds")]
    BacktrackingFailure { rounds: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl<T: Scalar> Error<T> {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Self::Configuration(msg.into())
    }

    /// Short machine-readable tag, used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::InvalidInput(_) => "invalid_input",
            Self::Configuration(_) => "configuration",
            Self::NonCertified { .. } => "non_certified_subproblem",
            Self::LineSearchFailure { .. } => "line_search_failure",
            Self::BacktrackingFailure { .. } => "backtracking_failure",
            Self::InsufficientData(_) => "insufficient_data",
        }
    }
}
