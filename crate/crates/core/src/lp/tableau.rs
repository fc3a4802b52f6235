use super::{LpError, StandardFormLp, FEAS_TOL};
use crate::linalg::{DenseMatrix, RANK_TOL};

/// Where a variable currently sits in the tableau.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarPosition {
    Basic(usize),
    Nonbasic(usize),
}

/// Dense simplex tableau in dictionary form `x_B + body * x_N = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexTableau {
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    /// rows x nonbasic, row-major
    body: Vec<f64>,
    rhs: Vec<f64>,
    cost_row: Vec<f64>,
    cost_corner: f64,
    constraint_slacks: Vec<usize>,
    position: Vec<VarPosition>,
}

impl SimplexTableau {
    /// Assembles a tableau from its parts and checks the partition invariants.
    pub fn new(
        basic: Vec<usize>,
        nonbasic: Vec<usize>,
        body: Vec<f64>,
        rhs: Vec<f64>,
        cost_row: Vec<f64>,
        cost_corner: f64,
        constraint_slacks: Vec<usize>,
    ) -> Result<Self, LpError> {
        let rows = basic.len();
        let cols = nonbasic.len();
        if rhs.len() != rows {
            return Err(LpError::DimensionMismatch {
                expected: rows,
                got: rhs.len(),
            });
        }
        if cost_row.len() != cols {
            return Err(LpError::DimensionMismatch {
                expected: cols,
                got: cost_row.len(),
            });
        }
        if body.len() != rows * cols {
            return Err(LpError::DimensionMismatch {
                expected: rows * cols,
                got: body.len(),
            });
        }
        let n_vars = rows + cols;
        let mut position = vec![None; n_vars];
        for (r, &v) in basic.iter().enumerate() {
            if v >= n_vars || position[v].is_some() {
                return Err(LpError::InvalidTableau(format!(
                    "variable {v} listed twice or out of range"
                )));
            }
            position[v] = Some(VarPosition::Basic(r));
        }
        for (c, &v) in nonbasic.iter().enumerate() {
            if v >= n_vars || position[v].is_some() {
                return Err(LpError::InvalidTableau(format!(
                    "variable {v} listed twice or out of range"
                )));
            }
            position[v] = Some(VarPosition::Nonbasic(c));
        }
        if let Some(&s) = constraint_slacks.iter().find(|&&s| s >= n_vars) {
            return Err(LpError::InvalidTableau(format!(
                "slack variable {s} out of range"
            )));
        }
        let all_finite = body
            .iter()
            .chain(&rhs)
            .chain(&cost_row)
            .chain(std::iter::once(&cost_corner))
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(LpError::NonFinite("tableau entries"));
        }
        Ok(Self {
            basic,
            nonbasic,
            body,
            rhs,
            cost_row,
            cost_corner,
            constraint_slacks,
            position: position.into_iter().map(Option::unwrap).collect(),
        })
    }

    /// Tableau of `lp` with respect to the given basic variables.
    ///
    /// The listed columns must form a regular basis matrix. Non-basic
    /// variables are kept in ascending index order.
    pub fn from_basis(lp: &StandardFormLp, basis: &[usize]) -> Result<Self, LpError> {
        let rows = lp.num_rows();
        if basis.len() != rows {
            return Err(LpError::DimensionMismatch {
                expected: rows,
                got: basis.len(),
            });
        }
        let basis_matrix = lp.eq_matrix.select_columns(basis);
        let inv = basis_matrix.inverse().ok_or(LpError::SingularBasis)?;
        let mut is_basic = vec![false; lp.num_vars()];
        for &b in basis {
            if b >= lp.num_vars() || is_basic[b] {
                return Err(LpError::InvalidTableau(format!("bad basis entry {b}")));
            }
            is_basic[b] = true;
        }
        let nonbasic: Vec<usize> = (0..lp.num_vars()).filter(|&v| !is_basic[v]).collect();
        let body_m = inv.matmul(&lp.eq_matrix.select_columns(&nonbasic));
        let rhs_m = inv.matmul(&DenseMatrix::from_rows(
            &lp.eq_rhs.iter().map(|&v| vec![v]).collect::<Vec<_>>(),
        ));
        let rhs: Vec<f64> = (0..rows).map(|i| rhs_m[(i, 0)]).collect();
        let mut body = Vec::with_capacity(rows * nonbasic.len());
        for i in 0..rows {
            body.extend(body_m.row(i).iter().map(|&v| snap(v)));
        }
        let cost_b: Vec<f64> = basis.iter().map(|&b| lp.cost[b]).collect();
        let cost_row: Vec<f64> = nonbasic
            .iter()
            .enumerate()
            .map(|(j, &v)| lp.cost[v] - (0..rows).map(|i| cost_b[i] * body_m[(i, j)]).sum::<f64>())
            .collect();
        let c0: f64 = cost_b.iter().zip(&rhs).map(|(c, b)| c * b).sum();
        Self::new(
            basis.to_vec(),
            nonbasic,
            body,
            rhs.into_iter().map(snap).collect(),
            cost_row,
            -c0,
            lp.constraint_slacks.clone(),
        )
    }

    pub fn num_rows(&self) -> usize {
        self.basic.len()
    }

    pub fn num_cols(&self) -> usize {
        self.nonbasic.len()
    }

    pub fn num_vars(&self) -> usize {
        self.position.len()
    }

    pub fn basic_vars(&self) -> &[usize] {
        &self.basic
    }

    pub fn nonbasic_vars(&self) -> &[usize] {
        &self.nonbasic
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn cost_row(&self) -> &[f64] {
        &self.cost_row
    }

    pub fn cost_corner(&self) -> f64 {
        self.cost_corner
    }

    pub fn body_row(&self, r: usize) -> &[f64] {
        let c = self.num_cols();
        &self.body[r * c..(r + 1) * c]
    }

    pub fn body(&self, r: usize, c: usize) -> f64 {
        self.body[r * self.num_cols() + c]
    }

    pub fn constraint_slacks(&self) -> &[usize] {
        &self.constraint_slacks
    }

    pub fn position(&self, var: usize) -> VarPosition {
        self.position[var]
    }

    /// Objective value at the current vertex.
    pub fn objective(&self) -> f64 {
        -self.cost_corner
    }

    pub fn is_primal_feasible(&self) -> bool {
        self.rhs.iter().all(|&v| v >= -FEAS_TOL)
    }

    pub fn is_dual_feasible(&self) -> bool {
        self.cost_row.iter().all(|&v| v >= -FEAS_TOL)
    }

    pub fn is_optimal(&self) -> bool {
        self.is_primal_feasible() && self.is_dual_feasible()
    }

    /// Value of `var` at the current vertex.
    pub fn value(&self, var: usize) -> f64 {
        match self.position[var] {
            VarPosition::Basic(r) => self.rhs[r],
            VarPosition::Nonbasic(_) => 0.0,
        }
    }

    /// The current vertex over all variables.
    pub fn vertex(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.num_vars()];
        for (r, &v) in self.basic.iter().enumerate() {
            x[v] = self.rhs[r];
        }
        x
    }

    /// Sorted set of basic variables; two tableaus with equal sets describe
    /// the same basis.
    pub fn basis_signature(&self) -> Vec<usize> {
        let mut b = self.basic.clone();
        b.sort_unstable();
        b
    }

    fn slack_of(&self, constraint_id: usize) -> Result<usize, LpError> {
        self.constraint_slacks
            .get(constraint_id)
            .copied()
            .ok_or(LpError::UnknownConstraint(constraint_id))
    }

    /// Exchanges the basic variable of `row` with the non-basic variable of
    /// column `col`.
    pub(crate) fn pivot(&mut self, row: usize, col: usize) {
        let cols = self.num_cols();
        let rows = self.num_rows();
        let p = self.body[row * cols + col];
        debug_assert!(p.abs() > 0.0);

        // pivot row
        let inv_p = 1.0 / p;
        for k in 0..cols {
            if k != col {
                self.body[row * cols + k] *= inv_p;
            }
        }
        self.body[row * cols + col] = inv_p;
        self.rhs[row] *= inv_p;

        let pivot_row: Vec<f64> = self.body[row * cols..(row + 1) * cols].to_vec();
        let pivot_rhs = self.rhs[row];

        for i in 0..rows {
            if i == row {
                continue;
            }
            let f = self.body[i * cols + col];
            if f == 0.0 {
                continue;
            }
            let r = &mut self.body[i * cols..(i + 1) * cols];
            for k in 0..cols {
                if k != col {
                    r[k] = snap(r[k] - f * pivot_row[k]);
                }
            }
            r[col] = snap(-f * inv_p);
            self.rhs[i] = snap(self.rhs[i] - f * pivot_rhs);
        }

        let cj = self.cost_row[col];
        if cj != 0.0 {
            for k in 0..cols {
                if k != col {
                    self.cost_row[k] = snap(self.cost_row[k] - cj * pivot_row[k]);
                }
            }
            self.cost_row[col] = snap(-cj * inv_p);
            self.cost_corner -= cj * pivot_rhs;
        }

        let leaving = self.basic[row];
        let entering = self.nonbasic[col];
        self.basic[row] = entering;
        self.nonbasic[col] = leaving;
        self.position[entering] = VarPosition::Basic(row);
        self.position[leaving] = VarPosition::Nonbasic(col);
    }

    /// Lowers the right-hand side of inequality `constraint_id` by `delta`.
    ///
    /// The slack keeps its column but is redefined as `slack - delta`. A basic
    /// slack just loses `delta` from its value; a non-basic one shifts every
    /// basic value by `delta` times its column and the objective by `delta`
    /// times its reduced cost. Dual feasibility is preserved, so an optimal
    /// tableau stays a valid warm start for [`dual_simplex`](super::dual_simplex).
    pub fn tighten_rhs(&mut self, constraint_id: usize, delta: f64) -> Result<(), LpError> {
        let slack = self.slack_of(constraint_id)?;
        if !delta.is_finite() {
            return Err(LpError::NonFinite("delta"));
        }
        if delta == 0.0 {
            return Ok(());
        }
        match self.position[slack] {
            VarPosition::Basic(r) => {
                self.rhs[r] = snap(self.rhs[r] - delta);
            }
            VarPosition::Nonbasic(c) => {
                let cols = self.num_cols();
                for r in 0..self.num_rows() {
                    let a = self.body[r * cols + c];
                    if a != 0.0 {
                        self.rhs[r] = snap(self.rhs[r] - delta * a);
                    }
                }
                self.cost_corner -= self.cost_row[c] * delta;
            }
        }
        Ok(())
    }

    /// Appends the inequality `<a, x> <= b0` as a new row with a fresh basic
    /// slack, and registers it as the next constraint id.
    ///
    /// `a` ranges over all current variables. Basic variables are eliminated
    /// through their rows, so the new row reads
    /// `slack + (a_N - Aᵀ a_B) x_N = b0 - <a_B, rhs>`. The cost row is
    /// untouched, so the result is dual feasible whenever the input was.
    /// Returns the index of the new slack variable.
    pub fn add_cut_row(&mut self, a: &[f64], b0: f64) -> Result<usize, LpError> {
        if a.len() != self.num_vars() {
            return Err(LpError::DimensionMismatch {
                expected: self.num_vars(),
                got: a.len(),
            });
        }
        if !b0.is_finite() || a.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("cut coefficients"));
        }
        let cols = self.num_cols();
        let mut new_row: Vec<f64> = self.nonbasic.iter().map(|&v| a[v]).collect();
        let mut new_rhs = b0;
        for (r, &bv) in self.basic.iter().enumerate() {
            let ab = a[bv];
            if ab == 0.0 {
                continue;
            }
            new_rhs -= ab * self.rhs[r];
            let row = &self.body[r * cols..(r + 1) * cols];
            for (x, y) in new_row.iter_mut().zip(row) {
                *x -= ab * y;
            }
        }
        let slack = self.num_vars();
        self.body.extend(new_row.into_iter().map(snap));
        self.rhs.push(snap(new_rhs));
        self.basic.push(slack);
        self.position.push(VarPosition::Basic(self.basic.len() - 1));
        self.constraint_slacks.push(slack);
        Ok(slack)
    }

    /// Derivative of the optimal value with respect to the right-hand side of
    /// inequality `constraint_id`, assuming the current basis stays optimal.
    ///
    /// Zero if the slack is basic (inactive constraint); otherwise minus the
    /// slack's reduced cost. At a degenerate vertex the basis may change on
    /// one side, in which case this is the one-sided rate implied by the
    /// present basis, not a two-sided derivative.
    pub fn rhs_sensitivity(&self, constraint_id: usize) -> Result<f64, LpError> {
        let slack = self.slack_of(constraint_id)?;
        Ok(match self.position[slack] {
            VarPosition::Basic(_) => 0.0,
            VarPosition::Nonbasic(c) => -self.cost_row[c],
        })
    }

    /// Removes a row whose basic variable is to be dropped, together with
    /// that variable. Used by phase 1 for redundant rows.
    pub(crate) fn remove_row(&mut self, row: usize) {
        let cols = self.num_cols();
        self.body.drain(row * cols..(row + 1) * cols);
        self.rhs.remove(row);
        let var = self.basic.remove(row);
        self.drop_var(var);
    }

    /// Removes a non-basic column together with its variable.
    pub(crate) fn remove_column(&mut self, col: usize) {
        let cols = self.num_cols();
        let rows = self.num_rows();
        let mut body = Vec::with_capacity(rows * (cols - 1));
        for r in 0..rows {
            for k in 0..cols {
                if k != col {
                    body.push(self.body[r * cols + k]);
                }
            }
        }
        self.body = body;
        self.cost_row.remove(col);
        let var = self.nonbasic.remove(col);
        self.drop_var(var);
    }

    /// Renumbers variables after removing `var`; indices above it shift down.
    fn drop_var(&mut self, var: usize) {
        let shift = |v: &mut usize| {
            if *v > var {
                *v -= 1;
            }
        };
        self.basic.iter_mut().for_each(shift);
        self.nonbasic.iter_mut().for_each(shift);
        self.constraint_slacks.retain(|&s| s != var);
        self.constraint_slacks.iter_mut().for_each(shift);
        self.rebuild_positions();
    }

    fn rebuild_positions(&mut self) {
        let mut position = vec![VarPosition::Basic(0); self.basic.len() + self.nonbasic.len()];
        for (r, &v) in self.basic.iter().enumerate() {
            position[v] = VarPosition::Basic(r);
        }
        for (c, &v) in self.nonbasic.iter().enumerate() {
            position[v] = VarPosition::Nonbasic(c);
        }
        self.position = position;
    }

    pub(crate) fn set_costs(&mut self, cost_row: Vec<f64>, cost_corner: f64) {
        debug_assert_eq!(cost_row.len(), self.num_cols());
        self.cost_row = cost_row;
        self.cost_corner = cost_corner;
    }

    pub(crate) fn set_rhs(&mut self, row: usize, value: f64) {
        self.rhs[row] = value;
    }
}

/// Flushes round-off residue to exact zero.
#[inline]
pub(crate) fn snap(v: f64) -> f64 {
    if v.abs() < 1e-13 {
        0.0
    } else {
        v
    }
}

// Tolerance for treating a body entry as usable pivot.
pub(crate) const PIVOT_TOL: f64 = RANK_TOL;
