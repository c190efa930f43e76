use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coefficient {name} = {value} at {location} is outside its domain ({requirement})")]
    CoefficientDomain {
        name: &'static str,
        value: f64,
        location: String,
        requirement: &'static str,
    },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("nonlinearity is not nondecreasing: α({s0}) = {a0} > α({s1}) = {a1}")]
    NotMonotone { s0: f64, a0: f64, s1: f64, a1: f64 },

    #[error("nonlinearity must vanish at the origin, got α(0) = {0}")]
    NonzeroAtOrigin(f64),

    #[error("product vector is not coupled: boundary values differ from the trace by {0:e}")]
    Uncoupled(f64),

    #[error("wrong certificate: {0}")]
    WrongCertificate(String),

    #[error("eigenvector is not normalized in the product-space norm (norm = {0})")]
    NotNormalized(f64),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    EigenNonConvergence { iterations: usize, residual: f64 },

    #[error("ground state is not positive (min value {0:e}); refine the mesh")]
    GroundStateSign(f64),

    #[error("Λ vanishes at t = {0} while α does not; ratio Λ(2t)/Λ(t) is undefined")]
    DivisionGuard(f64),

    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("undefined interval arithmetic: {0}")]
    Indeterminate(String),

    #[error("config error at line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("expression error in `{source_text}`: {message}")]
    Expr { source_text: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
