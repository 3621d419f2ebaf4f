use thiserror::Error;

/// Errors raised by grid construction, discretization, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("node {0} is not a boundary node")]
    NotBoundaryNode(usize),

    #[error("matrix is not symmetric (|a12 - a21| = {0:e})")]
    NonSymmetric(f64),

    #[error("operator family is empty")]
    EmptyFamily,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("diffusion matrix violates ellipticity at node {node}: eigenvalues ({lo:e}, {hi:e}) outside [{alpha}, {beta}]")]
    Ellipticity {
        node: usize,
        lo: f64,
        hi: f64,
        alpha: f64,
        beta: f64,
    },

    #[error("linear system is singular (pivot {pivot:e} at row {row})")]
    Singular { row: usize, pivot: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("weight vanishes identically on the grid")]
    ZeroWeight,

    #[error("weights have disjoint supports on the grid")]
    DisjointWeights,

    #[error("iterate lost positivity at sweep {iteration} (min interior value {min:e})")]
    PositivityLost { iteration: usize, min: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("monotone iteration decreased at sweep {iteration} by {amount:e}")]
    MonotonicityViolated { iteration: usize, amount: f64 },

    #[error("subsolution audit failed: {0}")]
    AuditFailed(String),

    #[error("eigen pairs have different sign branches")]
    SignMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
