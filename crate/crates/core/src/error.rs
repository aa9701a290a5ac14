use crate::free_energy::SolveResult;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("goal out of range: goal index {goal} does not fit a world with {n_states} states")]
    GoalOutOfRange { goal: usize, n_states: usize },

    #[error("coordinate out of range: ({row}, {col}) not inside a {height}x{width} grid")]
    CoordinateOutOfRange {
        row: usize,
        col: usize,
        width: usize,
        height: usize,
    },

    #[error("state index out of range: {index} not inside a world with {n_states} states")]
    StateOutOfRange { index: usize, n_states: usize },

    #[error("dimension mismatch: {context} (expected {expected}, got {actual})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid distribution: {reason}")]
    InvalidDistribution { reason: String },

    #[error("invalid argument: {reason}")]
    InvalidArgument { reason: String },

    #[error("matrix is not square: {rows} rows, {cols} columns")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max |d_ij - d_ji| = {max_asymmetry})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("chain is not absorbing: goal unreachable under the given policy")]
    NonAbsorbing,

    #[error("all {count} trajectories were truncated at {max_steps} steps before reaching the goal")]
    AllTruncated { count: usize, max_steps: usize },

    #[error("value iteration failed to converge after {sweeps} sweeps (residual {residual}); some state cannot reach the goal")]
    ValueIterationDiverged { sweeps: usize, residual: f64 },

    #[error(
        "solver did not converge within {iterations} iterations \
         (free-energy residual {f_residual}, policy residual {policy_residual})"
    )]
    NoConvergence {
        iterations: usize,
        f_residual: f64,
        policy_residual: f64,
        /// Best iterate so far, with `converged == false`.
        result: Box<SolveResult>,
    },

    #[error("partition function underflowed to zero despite log-domain evaluation")]
    NumericalUnderflow,

    #[error("decision-information recursion diverged: the policy does not reach the goal")]
    Divergence,

    #[error("subpolicy supports overlap beyond the subgoal: extra shared states {extra:?}")]
    OverlappingSupports { extra: Vec<usize> },

    #[error("pairwise free energy for ({from} -> {to}) is missing or unconverged")]
    MissingPairEntry { from: usize, to: usize },

    #[error("distance matrix contains unconverged entries; refusing to embed")]
    UnconvergedEntries,

    #[error("solve failed at beta = {beta}: {source}")]
    SweepFailed {
        beta: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
