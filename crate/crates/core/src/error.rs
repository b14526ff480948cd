use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("row {row} is not diagonally dominant: D = {diag}, row sum of M = {row_sum}")]
    DominanceViolation { row: usize, diag: f64, row_sum: f64 },

    #[error("dense routine refused n = {n} (limit {limit}; set POLYSPARSE_DENSE_LIMIT to raise)")]
    SizeLimitExceeded { n: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("diagonal entry {index} must be strictly positive, got {value}")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("entry ({row}, {col}) has invalid weight {weight}")]
    InvalidWeight { row: usize, col: usize, weight: f64 },

    #[error("index {index} out of range for bound {bound}")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("kernels differ: dim null(X) = {x_kernel}, dim null(Y) = {y_kernel}, leakage {leakage:.3e}")]
    KernelMismatch {
        x_kernel: usize,
        y_kernel: usize,
        leakage: f64,
    },

    #[error("matrix is not positive semi-definite (smallest eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    #[error("normalization left a negative diagonal residue {value:.3e} at row {row}")]
    NegativeDiagonalResidue { row: usize, value: f64 },

    #[error("mixture weights vanish: delta = {delta}")]
    DeltaOverflow { delta: f64 },

    #[error("mixture weight alpha[{index}] = {value} is outside (0, 1)")]
    WeightOutOfRange { index: usize, value: f64 },

    #[error("density vanishes at x = {x}")]
    DivisionByZero { x: f64 },

    #[error("system is ill-conditioned (relative residual {residual:.3e}, condition {condition:.3e})")]
    IllConditioned { residual: f64, condition: f64 },

    #[error("nodes {i} and {j} collide (gap {gap:.3e})")]
    NodeCollision { i: usize, j: usize, gap: f64 },

    #[error("vertex {0} is not in the subset")]
    VertexNotInSet(usize),

    #[error("subset must be non-empty and proper")]
    EmptySubset,

    #[error("kappa bound too small: terminal level norm {norm:.3e} after {levels} levels")]
    KappaTooSmall { norm: f64, levels: usize },

    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
