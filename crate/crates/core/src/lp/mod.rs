//! Dense tableau simplex engine.
//!
//! The tableau stores an LP in dictionary form
//!
//! ```text
//!     minimize   c0 + <c, x_N>
//!     subject to x_B + A x_N = b,   x >= 0
//! ```
//!
//! with `b` the `rhs` column, `A` the `body`, `c` the `cost_row` and `-c0`
//! the `cost_corner`. The current vertex is `x_N = 0`, `x_B = b`.
//!
//! Both the primal and the dual simplex method operate on this layout, so an
//! optimal tableau can be modified (right-hand side tightened, cut rows
//! appended) and re-optimized from the same basis.

mod cold;
mod simplex;
mod tableau;

pub use cold::{solve_cold, ColdSolve};
pub use simplex::{default_pivot_limit, dual_simplex, primal_simplex, SolveOutcome, SolveStatus};
pub use tableau::{SimplexTableau, VarPosition};

use crate::linalg::DenseMatrix;
use thiserror::Error;

/// Absolute tolerance on right-hand sides and reduced costs.
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("tableau is not primal feasible: row {row} has rhs {value}")]
    NotPrimalFeasible { row: usize, value: f64 },
    #[error("tableau is not dual feasible: column {col} has reduced cost {value}")]
    NotDualFeasible { col: usize, value: f64 },
    #[error("constraint {0} has no slack variable in this tableau")]
    UnknownConstraint(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("basis matrix is singular")]
    SingularBasis,
    #[error("invalid tableau: {0}")]
    InvalidTableau(String),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
}

/// `min <cost, x>` subject to `eq_matrix x = eq_rhs`, `x >= 0`.
///
/// `constraint_slacks[i]` names the slack variable of the `i`-th original
/// inequality, which lets tableaus built from this LP address inequalities
/// by id (for right-hand side tightening and sensitivities).
#[derive(Debug, Clone)]
pub struct StandardFormLp {
    pub cost: Vec<f64>,
    pub eq_matrix: DenseMatrix,
    pub eq_rhs: Vec<f64>,
    pub constraint_slacks: Vec<usize>,
}

impl StandardFormLp {
    pub fn new(
        cost: Vec<f64>,
        eq_matrix: DenseMatrix,
        eq_rhs: Vec<f64>,
        constraint_slacks: Vec<usize>,
    ) -> Result<Self, LpError> {
        if eq_matrix.cols() != cost.len() {
            return Err(LpError::DimensionMismatch {
                expected: eq_matrix.cols(),
                got: cost.len(),
            });
        }
        if eq_matrix.rows() != eq_rhs.len() {
            return Err(LpError::DimensionMismatch {
                expected: eq_matrix.rows(),
                got: eq_rhs.len(),
            });
        }
        if let Some(&bad) = constraint_slacks.iter().find(|&&s| s >= cost.len()) {
            return Err(LpError::DimensionMismatch {
                expected: cost.len(),
                got: bad,
            });
        }
        Ok(Self {
            cost,
            eq_matrix,
            eq_rhs,
            constraint_slacks,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.eq_rhs.len()
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest absolute equality residual `|A x - b|` at `x`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        (0..self.num_rows())
            .map(|i| {
                let ax: f64 = self
                    .eq_matrix
                    .row(i)
                    .iter()
                    .zip(x)
                    .map(|(a, v)| a * v)
                    .sum();
                (ax - self.eq_rhs[i]).abs()
            })
            .fold(0.0, f64::max)
    }
}
