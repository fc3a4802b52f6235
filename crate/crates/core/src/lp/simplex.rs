use super::tableau::PIVOT_TOL;
use super::{LpError, SimplexTableau, FEAS_TOL};

/// Terminal state of a simplex run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Unbounded,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub tableau: SimplexTableau,
    pub objective: f64,
    pub pivot_count: usize,
}

impl SolveOutcome {
    fn finish(status: SolveStatus, tableau: SimplexTableau, pivot_count: usize) -> Self {
        Self {
            status,
            objective: tableau.objective(),
            tableau,
            pivot_count,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// `10 * (rows + cols)^2`, generous enough that Bland's rule always finishes.
pub fn default_pivot_limit(t: &SimplexTableau) -> usize {
    let s = t.num_rows() + t.num_cols();
    10 * s * s + 10
}

// Ratios within this relative distance of the minimum count as ties.
const TIE_TOL: f64 = 1e-12;

// After this many consecutive objective-neutral dual pivots the row choice
// falls back from most-negative to smallest index.
const DUAL_DEGENERATE_STREAK: usize = 50;

/// Primal simplex with Bland's rule.
///
/// The entering column is the non-basic variable of smallest index with a
/// negative reduced cost; the leaving row minimizes the ratio `rhs / body`
/// over positive entries, ties going to the smallest basic variable index.
pub fn primal_simplex(mut t: SimplexTableau, max_pivots: usize) -> Result<SolveOutcome, LpError> {
    if let Some((row, &value)) = t.rhs().iter().enumerate().find(|(_, &v)| v < -FEAS_TOL) {
        return Err(LpError::NotPrimalFeasible { row, value });
    }
    let mut pivots = 0;
    loop {
        let entering = (0..t.num_cols())
            .filter(|&c| t.cost_row()[c] < -FEAS_TOL)
            .min_by_key(|&c| t.nonbasic_vars()[c]);
        let Some(col) = entering else {
            return Ok(SolveOutcome::finish(SolveStatus::Optimal, t, pivots));
        };

        let mut best: Option<(usize, f64)> = None;
        for r in 0..t.num_rows() {
            let a = t.body(r, col);
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = t.rhs()[r].max(0.0) / a;
            best = match best {
                None => Some((r, ratio)),
                Some((br, bratio)) => {
                    if ratio < bratio - TIE_TOL * (1.0 + bratio.abs()) {
                        Some((r, ratio))
                    } else if ratio <= bratio + TIE_TOL * (1.0 + bratio.abs())
                        && t.basic_vars()[r] < t.basic_vars()[br]
                    {
                        Some((r, ratio.min(bratio)))
                    } else {
                        Some((br, bratio))
                    }
                }
            };
        }
        let Some((row, _)) = best else {
            return Ok(SolveOutcome::finish(SolveStatus::Unbounded, t, pivots));
        };
        if pivots >= max_pivots {
            return Ok(SolveOutcome::finish(SolveStatus::IterationLimit, t, pivots));
        }
        if t.rhs()[row] < 0.0 {
            // within tolerance; treat as degenerate
            t.set_rhs(row, 0.0);
        }
        t.pivot(row, col);
        pivots += 1;
    }
}

/// Dual simplex from a dual-feasible tableau.
///
/// The leaving row is the one with the most negative right-hand side (ties to
/// the smallest basic index). The entering column minimizes
/// `cost / -body` over negative body entries, ties to the smallest variable
/// index. A long run of degenerate pivots switches the row choice to the
/// smallest-index rule, which cannot cycle.
pub fn dual_simplex(mut t: SimplexTableau, max_pivots: usize) -> Result<SolveOutcome, LpError> {
    if let Some((col, &value)) = t
        .cost_row()
        .iter()
        .enumerate()
        .find(|(_, &v)| v < -FEAS_TOL)
    {
        return Err(LpError::NotDualFeasible { col, value });
    }
    let mut pivots = 0;
    let mut degenerate_streak = 0;
    loop {
        let bland = degenerate_streak >= DUAL_DEGENERATE_STREAK;
        let mut leaving: Option<usize> = None;
        for r in 0..t.num_rows() {
            let v = t.rhs()[r];
            if v >= -FEAS_TOL {
                continue;
            }
            leaving = match leaving {
                None => Some(r),
                Some(br) => {
                    let better = if bland {
                        t.basic_vars()[r] < t.basic_vars()[br]
                    } else {
                        let bv = t.rhs()[br];
                        v < bv || (v == bv && t.basic_vars()[r] < t.basic_vars()[br])
                    };
                    Some(if better { r } else { br })
                }
            };
        }
        let Some(row) = leaving else {
            return Ok(SolveOutcome::finish(SolveStatus::Optimal, t, pivots));
        };

        let mut best: Option<(usize, f64)> = None;
        for c in 0..t.num_cols() {
            let a = t.body(row, c);
            if a >= -PIVOT_TOL {
                continue;
            }
            let ratio = t.cost_row()[c].max(0.0) / -a;
            best = match best {
                None => Some((c, ratio)),
                Some((bc, bratio)) => {
                    if ratio < bratio - TIE_TOL * (1.0 + bratio.abs()) {
                        Some((c, ratio))
                    } else if ratio <= bratio + TIE_TOL * (1.0 + bratio.abs())
                        && t.nonbasic_vars()[c] < t.nonbasic_vars()[bc]
                    {
                        Some((c, ratio.min(bratio)))
                    } else {
                        Some((bc, bratio))
                    }
                }
            };
        }
        let Some((col, ratio)) = best else {
            return Ok(SolveOutcome::finish(SolveStatus::Infeasible, t, pivots));
        };
        if pivots >= max_pivots {
            return Ok(SolveOutcome::finish(SolveStatus::IterationLimit, t, pivots));
        }
        t.pivot(row, col);
        pivots += 1;
        if ratio <= FEAS_TOL {
            degenerate_streak += 1;
        } else {
            degenerate_streak = 0;
        }
    }
}
