use alloc::string::String;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("argument {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },
    #[error("point is a singular point of the test function: {0}")]
    SingularPoint(String),
    #[error("finite-difference stencil leaves the regular set of the function")]
    StencilExitsDomain,
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("ellipticity violated: minimum eigenvalue {min_eigenvalue} at a sample point")]
    Ellipticity { min_eigenvalue: f64 },
    #[error("non-finite integrand at node {node}: {value}")]
    NonFinite { node: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("expression error: {0}")]
    Expression(String),
}

pub type Result<T> = core::result::Result<T, Error>;
