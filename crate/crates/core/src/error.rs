use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("ill-conditioned Gram matrix (condition number {0:.3e} exceeds 1e12)")]
    IllConditioned(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported norm combination: {0}")]
    Unsupported(&'static str),

    #[error("label sets differ")]
    LabelMismatch,

    #[error("vectors are linearly dependent")]
    DependentBasis,

    #[error("surjection is rank deficient")]
    RankDeficient,

    #[error("degenerate polytope: {0}")]
    DegeneratePolytope(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("slope coverage violated at target {target:?}: box boundary slope {boundary_slope:.6} on axis {axis}")]
    SlopeCoverage {
        target: Vec<f64>,
        axis: usize,
        boundary_slope: f64,
    },

    #[error("density has zero mass")]
    ZeroMass,

    #[error("missing level k = {0}")]
    MissingLevel(u32),

    #[error("submultiplicativity violated: w_{{k+l}}(a+b) > w_k(a) + w_l(b) at k = {k}, l = {l}, a = {alpha:?}, b = {beta:?}")]
    NotSubmultiplicative {
        k: u32,
        l: u32,
        alpha: Vec<i64>,
        beta: Vec<i64>,
    },

    #[error("filtration is unbounded: |e_k| / k = {ratio:.4} exceeds C = {bound:.4} at k = {k}")]
    Unbounded { k: u32, ratio: f64, bound: f64 },

    #[error("inconsistent flag: {0}")]
    InconsistentFlag(String),

    #[error("memory guard: {0} points exceed the 10^7 limit")]
    MemoryGuard(usize),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Numerical guards map to a dedicated CLI exit code.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::IllConditioned(_)
                | Error::NotPositiveDefinite
                | Error::SlopeCoverage { .. }
                | Error::MemoryGuard(_)
        )
    }
}
