//! Dense linear algebra and the two embedded optimizers (simplex LP and
//! projected gradient) shared by the analysis modules.

pub mod convex;
pub mod matrix;
pub mod simplex;

use thiserror::Error;

pub use convex::{convex_solve, dykstra, ConvexProgram, ConvexSet, ConvexSolution, HalfSpace, NonNegative};
pub use matrix::{matrix_power, solve_linear, DenseMatrix, LuFactors};
pub use simplex::{lp_solve, LinearProgram, LpSolution};

/// Pivots at or below this magnitude make a matrix singular.
pub const PIVOT_THRESHOLD: f64 = 1e-12;
/// Residual bound for linear solves, relative to `1 + ‖b‖∞`.
pub const SOLVE_TOL: f64 = 1e-9;
/// Feasibility and optimality tolerance for LP and convex post-checks.
pub const OPTIMALITY_TOL: f64 = 1e-8;
/// Margin used to close strict inequalities.
pub const STRICT_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NumericsError {
    #[error("singular matrix: pivot {pivot:e} in column {column}")]
    SingularMatrix { column: usize, pivot: f64 },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite entry")]
    NonFinite,
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex exceeded {0} pivots")]
    IterationLimit(usize),
    #[error("no convergence after {iterations} iterations (objective {value})")]
    NoConvergence {
        iterations: usize,
        best: Vec<f64>,
        value: f64,
    },
}
