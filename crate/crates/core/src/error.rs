use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised anywhere in the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("invalid variance profile: {0}")]
    InvalidVarianceProfile(String),
    #[error("invalid spectral law: {0}")]
    InvalidSpectrum(String),
    #[error("matrix has an all-zero {which} at index {index}")]
    ZeroLine { which: &'static str, index: usize },
    #[error("sinkhorn scaling did not converge in {iterations} iterations (deviation {deviation:e})")]
    SinkhornNoConvergence { iterations: usize, deviation: f64 },
    #[error("size cap exceeded: {what} needs {needed}, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        needed: u128,
        cap: u128,
    },
    #[error("ground sets differ: {0} vs {1}")]
    GroundSetMismatch(usize, usize),
    #[error("first partition does not refine the second")]
    NotRefinement,
    #[error("ground set size {0} is odd")]
    OddGroundSet(usize),
    #[error("moment oracle cannot supply E[X^{0:?}]")]
    MissingMoment(Vec<u32>),
    #[error("arity mismatch: {0}")]
    Arity(String),
    #[error("invalid tensor network: {0}")]
    InvalidNetwork(String),
    #[error("graph precondition violated: {0}")]
    GraphPrecondition(String),
    #[error("covariance is numerically singular (condition number {0:e})")]
    Singular(f64),
    #[error("non-finite value in iterate at step {step}")]
    NonFinite { step: usize },
    #[error("iterate diverged at step {step}: norm {norm:e} exceeds {limit:e}")]
    Diverged { step: usize, norm: f64, limit: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, Error>;
