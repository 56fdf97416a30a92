use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// Every variant carries enough context to tell the caller which object
/// failed which check; messages never depend on floating point rendering
/// beyond the residual that was measured.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for {len} items")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid dilation exponents {exponents:?}: {reason}")]
    InvalidDilation { exponents: Vec<u32>, reason: String },

    #[error("{what} is not homogeneous with respect to the dilation")]
    NotHomogeneous { what: String },

    #[error("field {index} has the wrong shape: {reason}")]
    BadFieldShape { index: usize, reason: String },

    #[error("operator is not homogeneous: word weights {weights:?}")]
    OperatorNotHomogeneous { weights: Vec<u32> },

    #[error("transpose requires divergence-free fields; field {index} has divergence {divergence}")]
    NonzeroDivergence { index: usize, divergence: String },

    #[error("operator degree {nu} must be a common multiple of the field degrees {degrees:?}")]
    NotCommonMultiple { nu: u32, degrees: Vec<u32> },

    #[error("operator construction needs a drift field of degree 2 but none was supplied")]
    MissingDrift,

    #[error("Lie algebra generation failed: {0}")]
    LieAlgebra(String),

    #[error("Hörmander rank condition fails: rank {rank} < {n} at {point}")]
    RankDeficient { rank: usize, n: usize, point: String },

    #[error("series did not terminate within {limit} terms")]
    NonTerminatingSeries { limit: usize },

    #[error("lifting construction failed: {0}")]
    Lifting(String),

    #[error("structural check `{check}` failed: {detail}")]
    CheckFailed { check: String, detail: String },

    #[error(
        "no homogeneous fundamental solution available: operator degree nu = {nu} \
         is not below the homogeneous dimension q = {q} (existence requires nu < q)"
    )]
    ExistenceHypothesis { nu: u32, q: u32 },

    #[error("kernel is singular at x = y; evaluate off the diagonal")]
    Pole,

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("no kernel shape is available for this lifted system: {0}")]
    KernelUnavailable(String),

    #[error("kernel calibration failed: {0}")]
    Calibration(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("metric computation failed: {0}")]
    Metric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
