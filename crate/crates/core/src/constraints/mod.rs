//! Linear differential constraints: symbols and projections, constrained
//! and penalized covariances, and lattice solves of the penalized operator.

mod covariance;
mod lattice;
mod operator;
mod sweep;

pub use covariance::{constrained_covariance, penalized_covariance, penalized_symbol};
pub use lattice::{lattice_penalized_exact, LatticeSolve, PenalizedOperator, SolverConfig, SolverMethod};
pub use operator::{
    grid_symbol, projector, symbol_matrix, ConstraintSet, DiffOperator, OperatorTerm, Projection,
    DEFAULT_RANK_TOLERANCE,
};
pub use sweep::{max_radius, penalty_sweep, SweepConfig, SweepRow, SweepTable};
