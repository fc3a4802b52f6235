//! Two-phase cold start for LPs without a known feasible basis.

use super::tableau::{snap, PIVOT_TOL};
use super::{
    primal_simplex, LpError, SimplexTableau, SolveOutcome, SolveStatus, StandardFormLp, FEAS_TOL,
};

#[derive(Debug, Clone)]
pub struct ColdSolve {
    pub outcome: SolveOutcome,
    pub phase1_pivots: usize,
    pub phase2_pivots: usize,
}

impl ColdSolve {
    pub fn total_pivots(&self) -> usize {
        self.phase1_pivots + self.phase2_pivots
    }
}

/// Solves `lp` from scratch: an artificial-variable phase 1 finds a feasible
/// basis (rows that already carry a unit column reuse it), redundant rows are
/// dropped, then the primal simplex runs on the true costs.
///
/// The final tableau is expressed over the original variables only.
pub fn solve_cold(lp: &StandardFormLp, max_pivots: usize) -> Result<ColdSolve, LpError> {
    let rows = lp.num_rows();
    let n = lp.num_vars();
    if lp.cost.iter().chain(&lp.eq_rhs).any(|v| !v.is_finite()) {
        return Err(LpError::NonFinite("lp data"));
    }

    let signs: Vec<f64> = lp
        .eq_rhs
        .iter()
        .map(|&b| if b < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let coef = |i: usize, j: usize| signs[i] * lp.eq_matrix[(i, j)];

    // Reuse unit columns as the starting basis where possible.
    let mut basic: Vec<Option<usize>> = vec![None; rows];
    let mut used = vec![false; n];
    for j in 0..n {
        let mut hit = None;
        let mut unit = true;
        for i in 0..rows {
            let a = coef(i, j);
            if a == 0.0 {
                continue;
            }
            if a == 1.0 && hit.is_none() {
                hit = Some(i);
            } else {
                unit = false;
                break;
            }
        }
        if let (true, Some(i)) = (unit, hit) {
            if basic[i].is_none() && !used[j] {
                basic[i] = Some(j);
                used[j] = true;
            }
        }
    }
    let mut n_art = 0;
    let basic: Vec<usize> = basic
        .into_iter()
        .map(|b| {
            b.unwrap_or_else(|| {
                n_art += 1;
                n + n_art - 1
            })
        })
        .collect();
    let nonbasic: Vec<usize> = (0..n).filter(|&j| !used[j]).collect();

    let cols = nonbasic.len();
    let mut body = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        body.extend(nonbasic.iter().map(|&j| coef(i, j)));
    }
    let rhs: Vec<f64> = lp.eq_rhs.iter().map(|b| b.abs()).collect();

    let art_rows: Vec<usize> = (0..rows).filter(|&i| basic[i] >= n).collect();
    let mut cost_row = vec![0.0; cols];
    let mut c0 = 0.0;
    for &i in &art_rows {
        c0 += rhs[i];
        for (c, cr) in cost_row.iter_mut().enumerate() {
            *cr -= body[i * cols + c];
        }
    }

    let t = SimplexTableau::new(
        basic,
        nonbasic,
        body,
        rhs,
        cost_row,
        -c0,
        lp.constraint_slacks.clone(),
    )?;
    let phase1 = primal_simplex(t, max_pivots)?;
    let phase1_pivots = phase1.pivot_count;
    if phase1.status != SolveStatus::Optimal {
        return Ok(ColdSolve {
            outcome: phase1,
            phase1_pivots,
            phase2_pivots: 0,
        });
    }
    let scale = 1.0 + lp.eq_rhs.iter().map(|b| b.abs()).sum::<f64>();
    if phase1.objective > FEAS_TOL * scale {
        let mut outcome = phase1;
        outcome.status = SolveStatus::Infeasible;
        return Ok(ColdSolve {
            outcome,
            phase1_pivots,
            phase2_pivots: 0,
        });
    }

    let mut t = phase1.tableau;
    // Drive artificials out of the basis; rows where that is impossible are
    // linear combinations of the others.
    let mut r = 0;
    while r < t.num_rows() {
        if t.basic_vars()[r] < n {
            r += 1;
            continue;
        }
        t.set_rhs(r, 0.0);
        let col = (0..t.num_cols())
            .filter(|&c| t.nonbasic_vars()[c] < n && t.body(r, c).abs() > PIVOT_TOL)
            .max_by(|&a, &b| t.body(r, a).abs().total_cmp(&t.body(r, b).abs()));
        match col {
            Some(c) => {
                t.pivot(r, c);
                r += 1;
            }
            None => t.remove_row(r),
        }
    }
    // Artificial columns, highest index first so renumbering leaves the rest alone.
    let mut art_cols: Vec<(usize, usize)> = (0..t.num_cols())
        .filter(|&c| t.nonbasic_vars()[c] >= n)
        .map(|c| (t.nonbasic_vars()[c], c))
        .collect();
    art_cols.sort_unstable_by_key(|&(var, _)| std::cmp::Reverse(var));
    for (var, _) in art_cols {
        let c = t.nonbasic_vars().iter().position(|&v| v == var).unwrap();
        t.remove_column(c);
    }

    let cost_b: Vec<f64> = t.basic_vars().iter().map(|&v| lp.cost[v]).collect();
    let cost_row: Vec<f64> = (0..t.num_cols())
        .map(|c| {
            let v = t.nonbasic_vars()[c];
            snap(
                lp.cost[v]
                    - (0..t.num_rows())
                        .map(|i| cost_b[i] * t.body(i, c))
                        .sum::<f64>(),
            )
        })
        .collect();
    let c0: f64 = cost_b.iter().zip(t.rhs()).map(|(c, b)| c * b).sum();
    t.set_costs(cost_row, -c0);

    let phase2 = primal_simplex(t, max_pivots.saturating_sub(phase1_pivots))?;
    Ok(ColdSolve {
        phase2_pivots: phase2.pivot_count,
        outcome: phase2,
        phase1_pivots,
    })
}
