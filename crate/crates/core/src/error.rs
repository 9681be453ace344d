//! Error types shared across the engine.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("parse error at line {line} ({field}): {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("unknown family tag `{0}`")]
    UnknownFamily(String),

    #[error("p must be >= 1, got {0}")]
    InvalidExponent(f64),

    #[error("Sobolev spaces require a bounded interval domain")]
    SobolevUnboundedDomain,

    #[error("Sobolev spaces require F(a) = 0 at the left endpoint, got |F(a)| = {0:.3e}")]
    SobolevNonvanishingField(f64),

    #[error("trajectory left the domain at t = {time:.6e}")]
    DomainExit { time: f64 },

    #[error("trajectory blew up near t = {time:.6e}")]
    BlowUp { time: f64 },

    #[error("quadrature did not converge: requested {requested:.3e}, achieved {achieved:.3e}")]
    QuadratureNonConvergence { requested: f64, achieved: f64 },

    #[error("integral diverges: {0}")]
    DivergentIntegral(String),

    #[error("function is not in the space: {0}")]
    NotInSpace(String),

    #[error("theorem hypotheses not verified: {0}")]
    HypothesisNotVerified(String),

    #[error("weight is not p-admissible on the sampled grid: not a C0-semigroup on this space")]
    AdmissibilityRefuted,

    #[error("unsupported dimension N = {0}")]
    UnsupportedDimension(usize),

    #[error("empty sample grid")]
    EmptyGrid,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
}

pub type Result<T> = std::result::Result<T, EngineError>;
