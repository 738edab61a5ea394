use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("axis {axis} out of range for dimension {n}")]
    AxisOutOfRange { axis: usize, n: usize },

    #[error("grid with {n_grid} points per axis too coarse for cutoff {cutoff} (need at least {required})")]
    GridTooCoarse {
        n_grid: usize,
        cutoff: usize,
        required: usize,
    },

    #[error("series is not hermitian-valued ({context}): residual {residual:e}")]
    NotHermitian { context: String, residual: f64 },

    #[error("hermitian-valued flag required on {0}")]
    HermitianFlagMissing(String),

    #[error("weight must be a strictly positive scalar (min sampled value {min:e})")]
    NonPositiveWeight { min: f64 },

    #[error("weight absent on operator")]
    WeightAbsent,

    #[error("gauge field singular on validation grid: min |det| = {min_det:e}")]
    SingularGauge { min_det: f64 },

    #[error("gauge field violates the {kind} constraint: residual {residual:e}")]
    GaugeKindViolation { kind: String, residual: f64 },

    #[error("degenerate eigenvalue branch: gap {gap:e} below tolerance {tol:e}")]
    DegenerateBranch { gap: f64, tol: f64 },

    #[error("eigensolver failed to converge")]
    EigenFailure,

    #[error("matrix is singular (|pivot| = {pivot:e})")]
    SingularMatrix { pivot: f64 },

    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { pivot: f64, index: usize },

    #[error("quantity expected real has imaginary part {imag:e} (tolerance {tol:e})")]
    NotReal { imag: f64, tol: f64 },

    #[error("metric degenerate at sampled point: |eigenvalue| = {eig:e}")]
    DegenerateMetric { eig: f64 },

    #[error("metric signature changes over the sampled grid: {0}")]
    SignatureJump(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("Hamiltonian flow failed: {0}")]
    FlowFailure(String),

    #[error("gauge recovery failed: {0}")]
    GaugeRecovery(String),

    #[error("internal route cross-check failed: {0}")]
    RouteMismatch(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
