use thiserror::Error;

/// Errors raised across the swimmer library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SwimError {
    #[error("matrix is not an se(3) element: {0}")]
    StructureViolation(String),

    #[error("link index {index} out of range for a {links}-link chain")]
    IndexOutOfRange { index: usize, links: usize },

    #[error("grand resistance matrix is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("closed-form fields are degenerate for c_tau = 0; use the scallop branch")]
    DegenerateClosedForm,

    #[error("finite-difference stencil left the valid shape domain: {0}")]
    NumericalJacobianFailure(String),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible planner options: {0}")]
    InfeasibleOptions(String),
}

pub type Result<T> = std::result::Result<T, SwimError>;
