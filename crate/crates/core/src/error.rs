//! Error type shared by every module in the crate.

use thiserror::Error;

/// Unified error for construction, synthesis, and simulation failures.
#[derive(Debug, Error)]
pub enum Error {
    /// A dimension or size precondition was violated.
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// Input matrix expected unitary but is not (within `unitarity_tol`).
    #[error("matrix is not unitary: max |U\u{2020}U - I| = {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    /// An iterative kernel failed to converge or a checked residual exceeded
    /// its tolerance.
    #[error("numerical failure in {context}: residual {residual:.3e} exceeds {tolerance:.3e}")]
    NumericalFailure {
        context: &'static str,
        residual: f64,
        tolerance: f64,
    },

    /// Matrix logarithm hit the branch cut (an eigenphase within
    /// `branch_tol` of ±π).
    #[error("matrix log branch cut: eigenphase {phase} within tolerance of \u{00b1}\u{03c0}")]
    BranchCut { phase: f64 },

    /// A qudit handle was used after being consumed or measured.
    #[error("linearity violation: {0}")]
    LinearityViolation(String),

    /// Builder/circuit structural error (dim mismatch, unknown id, ...).
    #[error("circuit error: {0}")]
    Circuit(String),

    /// Simulator state norm drifted beyond `norm_tol`.
    #[error("state norm drift: |norm - 1| = {drift:.3e}")]
    NormDrift { drift: f64 },

    /// A size guard was exceeded (group enumeration, dense contraction,
    /// approximation-table growth).
    #[error("size guard exceeded: {what} = {value} > {limit}")]
    GuardExceeded {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    /// Solovay-Kitaev refused: the error trace increased, so the table's net
    /// radius is too coarse for the requested target.
    #[error("Solovay-Kitaev non-convergence: error trace {trace:?} increased at depth {depth}")]
    SkNonConvergence { trace: Vec<f64>, depth: usize },

    /// approx_decompose called outside its balance envelope.
    #[error("group-commutator balance: dist(\u{0394}, I) = {epsilon:.3e} exceeds threshold {threshold:.3e}")]
    BalanceExceeded { epsilon: f64, threshold: f64 },

    /// Hybrid compilation could not reach the requested epsilon.
    #[error("compilation budget not met: distance {distance:.3e} > epsilon {epsilon:.3e}")]
    BudgetNotMet { distance: f64, epsilon: f64 },

    /// JSON (de)serialization problems, with path context where available.
    #[error("format error: {0}")]
    Format(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<V> = std::result::Result<V, Error>;
