use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A centered design column has ℓ2 norm below 1e-12 and cannot be scaled.
    #[error("column {0} has zero variance after centering")]
    ZeroVarianceColumn(usize),

    /// Iterative routine hit its iteration cap before reaching tolerance.
    #[error("{what} did not converge within {iters} iterations (tol {tol:e})")]
    NoConvergence { what: &'static str, iters: usize, tol: f64 },

    /// A feasible region contains no point.
    #[error("feasible region is empty")]
    EmptyRegion,

    /// Linear minimization requested along a coordinate with no finite bound.
    #[error("objective unbounded: coordinate {0} has nonzero gradient and no finite bound")]
    UnboundedDirection(usize),

    /// A vector violated its `‖β‖₀ ≤ k` precondition.
    #[error("vector has {nnz} nonzeros, exceeds sparsity level {k}")]
    NotKSparse { nnz: usize, k: usize },

    /// `X'X` is singular where the closed-form level-set bound needs its inverse.
    #[error("X'X is singular; coefficient level-set bounds require n > p with full column rank")]
    SingularGram,

    /// Supplied level-set bound lies below the unconstrained minimum.
    #[error("UB {ub:e} is below the unconstrained loss minimum {min:e}")]
    InfeasibleUB { ub: f64, min: f64 },

    /// Relaxation solution is integral; the node cannot be branched.
    #[error("no fractional coordinate to branch on")]
    NoBranchCandidate,

    /// Supplied ParamBounds cannot support a bounded search (`beta_inf = 0` or non-finite).
    #[error("degenerate parameter bounds: beta_inf = {0}")]
    DegenerateBounds(f64),

    /// Problem or config fields contradict each other.
    #[error("spec conflict: {0}")]
    SpecConflict(String),

    /// Prediction-error denominator ‖Xβ⁰‖ is zero.
    #[error("zero signal: ‖Xβ⁰‖ = 0")]
    ZeroSignal,

    /// Relative accuracy reference f* is not positive.
    #[error("non-positive reference value {0}")]
    NonpositiveReference(f64),

    /// Input data violates a Dataset invariant.
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// Malformed binary dataset cache.
    #[error("bad dataset cache: {0}")]
    BadCache(String),
}

impl Error {
    /// Stable machine-readable error kind, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ZeroVarianceColumn(_) => "ZeroVarianceColumn",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::EmptyRegion => "EmptyRegion",
            Error::UnboundedDirection(_) => "UnboundedDirection",
            Error::NotKSparse { .. } => "NotKSparse",
            Error::SingularGram => "SingularGram",
            Error::InfeasibleUB { .. } => "InfeasibleUB",
            Error::NoBranchCandidate => "NoBranchCandidate",
            Error::DegenerateBounds(_) => "DegenerateBounds",
            Error::SpecConflict(_) => "SpecConflict",
            Error::ZeroSignal => "ZeroSignal",
            Error::NonpositiveReference(_) => "NonpositiveReference",
            Error::InvalidData(_) => "InvalidData",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
            Error::BadCache(_) => "BadCache",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
