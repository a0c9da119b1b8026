use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the range where the operation is defined.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A weight or drift evaluation produced a non-finite or non-positive value.
    #[error("domain error at r = {r}: {what}")]
    Domain { r: f64, what: String },

    /// Quadrature hit a non-finite integrand value on a mesh cell.
    #[error("non-finite quadrature value on cell {cell} ([{left}, {right}])")]
    SingularQuadrature { cell: usize, left: f64, right: f64 },

    /// The eigensolver or a linear solve did not converge or met a singular pivot.
    #[error("solver failure: {0}")]
    Solver(String),

    /// A matrix expected to be positive (semi)definite is not.
    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// A precondition on a preceding check was not met.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The eta interval of the blowup construction is empty.
    #[error("empty eta range: ({min}, {max}) for c = {c}")]
    EmptyEtaRange { min: f64, max: f64, c: f64 },

    /// Numerical small-r integrability disagrees with the closed-form exponent.
    #[error("H6 validation failed: {0}")]
    H6Validation(String),

    /// An implicit step produced components that are negative beyond tolerance.
    #[error("positivity violated at step {step}: min component {min} (norm {norm})")]
    Positivity { step: usize, min: f64, norm: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
