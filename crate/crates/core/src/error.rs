use thiserror::Error;

/// Errors raised by the analysis routines.
///
/// Violations of a preservation property are not errors: they are reported
/// as verdicts carrying a witness. These variants cover malformed input and
/// numerical failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("{routine} did not converge")]
    NoConvergence { routine: &'static str },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("invalid bipartite shape ({n}, {m}): both factors need dimension >= 2")]
    InvalidShape { n: usize, m: usize },

    #[error("invalid density matrix: {reason}")]
    InvalidDensityMatrix { reason: String },

    #[error("vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("states are parallel; no orthogonal component")]
    ParallelStates,

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("parameter {name} = {value} out of range")]
    ParamOutOfRange { name: &'static str, value: f64 },

    #[error("negative discriminant {0:.3e}: parameters are inconsistent")]
    NegativeDiscriminant(f64),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("matrix is rank deficient (smallest/largest singular value {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("basis images fit neither the local nor the swapped parallelism pattern")]
    InconsistentParallelism,

    #[error("no root bracketed on the search interval")]
    NoRoot,
}

pub type Result<T> = std::result::Result<T, Error>;
