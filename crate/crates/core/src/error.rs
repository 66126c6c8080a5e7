use thiserror::Error;

/// Errors produced by the sparse-leakage library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse instance: {0}")]
    Parse(String),

    #[error("joint distribution must be a square {k}x{k} matrix: {detail}")]
    Shape { k: usize, detail: String },

    #[error("k must be ≥ 2 (got {k})")]
    AlphabetTooSmall { k: usize },

    #[error("negative entry p_xy[{row}][{col}] = {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("non-finite entry p_xy[{row}][{col}]")]
    NonFinite { row: usize, col: usize },

    #[error("probabilities sum to {sum}, expected 1 within {tolerance}")]
    NotNormalized { sum: f64, tolerance: f64 },

    #[error("zero marginal {axis}[{index}] = {value}")]
    ZeroMarginal {
        axis: &'static str,
        index: usize,
        value: f64,
    },

    #[error("singular leakage matrix: reciprocal condition {rcond:e} below {threshold:e}")]
    SingularLeakage { rcond: f64, threshold: f64 },

    #[error("linear solve failed: matrix is singular at pivot {pivot}")]
    SingularSolve { pivot: usize },

    #[error("instance generation failed after {rounds} rejection rounds for k = {k}")]
    RejectionExhausted { k: usize, rounds: usize },

    #[error("not a probability vector: {0}")]
    NotProbability(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("no orthogonal complement in dimension {n}")]
    NoComplement { n: usize },

    #[error("zero vector has no orthogonal complement")]
    ZeroVector,

    #[error("Jacobi eigensolver did not converge in {sweeps} sweeps (off-diagonal {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("sparsity budget N = {n} outside 1..={k}")]
    InvalidBudget { n: usize, k: usize },

    #[error(
        "N = {n} is infeasible: a 1-sparse direction cannot be orthogonal to a full-support sqrt(P_X), so utility is 0"
    )]
    BudgetTooSmall { n: usize },

    #[error(
        "exact enumeration refused: C({k}, {n}) = {count} supports exceeds the limit {limit}; use the SDP path"
    )]
    CombinatorialGuard {
        k: usize,
        n: usize,
        count: u128,
        limit: u128,
    },

    #[error("tau must be positive (got {0})")]
    InvalidTau(f64),

    #[error("tau grid must be nonempty and ascending")]
    InvalidGrid,

    #[error("invalid solver options: {0}")]
    InvalidOptions(String),

    #[error("rounding collapsed: no feasible direction survives thresholding")]
    RoundingCollapsed,

    #[error("no converged SDP solution on the tau grid")]
    NoConvergedPoints,

    #[error("epsilon {epsilon} outside the safe range [0, {limit}]")]
    EpsilonOutOfRange { epsilon: f64, limit: f64 },

    #[error("negative probability {value:e} at index {index} after solving for P_Y|U")]
    NegativeProbability { index: usize, value: f64 },

    #[error("mismatched N ranges: {0}")]
    RangeMismatch(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
