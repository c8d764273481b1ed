use thiserror::Error;

/// Errors produced by the estimation library and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameter point outside the admissible set (alpha > 0, beta >= 1).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("quadrature did not reach tolerance {tolerance:e} (estimated error {estimate:e}) within {evaluations} evaluations")]
    QuadratureNonconvergence {
        tolerance: f64,
        estimate: f64,
        evaluations: usize,
    },

    /// A denominator or Jacobian is numerically zero.
    #[error("singular system: {0}")]
    Singular(String),

    #[error("no convergence after {iterations} iterations: {message}")]
    NonConvergence { iterations: usize, message: String },

    /// The target statistic cannot be produced by any admissible parameter.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// The sample carries no information (constant columns, all pairs tied).
    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("bisection failed: {0}")]
    BisectionFailure(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable tag, used in JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidParams(_) => "invalid_params",
            Error::QuadratureNonconvergence { .. } => "quadrature_nonconvergence",
            Error::Singular(_) => "singular",
            Error::NonConvergence { .. } => "non_convergence",
            Error::OutOfRange(_) => "out_of_range",
            Error::Degenerate(_) => "degenerate",
            Error::BisectionFailure(_) => "bisection_failure",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
