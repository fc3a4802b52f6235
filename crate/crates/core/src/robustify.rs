//! Budgeted capacity augmentation against the worst failure scenario.
//!
//! The outer problem minimizes a convex piecewise-affine function of the
//! increment `δb` over the budget simplex `{δb >= 0, <δb, 1> <= B}`: the
//! negated robust throughput, or the robust latency. Values and subgradients
//! come from the robust evaluator at capacities `b0 + δb`.

use crate::flow::LatencyConfig;
use crate::flow::ThroughputModel;
use crate::linalg::DenseMatrix;
use crate::lp::{
    default_pivot_limit, dual_simplex, primal_simplex, LpError, SimplexTableau, SolveStatus,
    StandardFormLp,
};
use crate::network::{DemandMatrix, Network};
use crate::robust::{
    robust_throughput_with_caps, worst_scenario_subgradient, LatencyReference, RobustError,
    RobustLatency, RobustOptions, RobustReport,
};

/// Capacity increments, one per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetAllocation {
    pub delta_b: Vec<f64>,
}

impl BudgetAllocation {
    pub fn zero(m: usize) -> Self {
        Self {
            delta_b: vec![0.0; m],
        }
    }

    pub fn total(&self) -> f64 {
        self.delta_b.iter().sum()
    }
}

/// Euclidean projection onto `{x >= 0, <x, 1> <= budget}`.
pub fn project_budget_simplex(v: &[f64], budget: f64) -> Vec<f64> {
    let clamped: Vec<f64> = v.iter().map(|&x| x.max(0.0)).collect();
    if clamped.iter().sum::<f64>() <= budget {
        return clamped;
    }
    // project onto {x >= 0, <x, 1> = budget}: x = max(v - τ, 0)
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    // the largest entry is always in the support
    let mut cumsum = sorted[0];
    let mut tau = sorted[0] - budget;
    for (i, &u) in sorted.iter().enumerate().skip(1) {
        cumsum += u;
        let t = (cumsum - budget) / (i + 1) as f64;
        if u - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// A convex function of the capacity increment with a subgradient oracle.
pub trait RobustObjective {
    fn dim(&self) -> usize;

    /// Value (minimization form) and a subgradient at `delta_b`.
    fn evaluate(&self, delta_b: &[f64]) -> Result<(f64, Vec<f64>), RobustError>;
}

fn shifted(base: &[f64], delta_b: &[f64]) -> Vec<f64> {
    base.iter().zip(delta_b).map(|(b, d)| b + d).collect()
}

/// `-robust_throughput(b0 + δb)`.
pub struct ThroughputObjective {
    model: ThroughputModel,
    base_caps: Vec<f64>,
    q: usize,
    opts: RobustOptions,
}

impl ThroughputObjective {
    pub fn new(
        net: &Network,
        d: &DemandMatrix,
        q: usize,
        opts: RobustOptions,
    ) -> Result<Self, RobustError> {
        Ok(Self {
            model: ThroughputModel::new(net, d)?,
            base_caps: net.capacities(),
            q,
            opts,
        })
    }

    pub fn report(&self, delta_b: &[f64]) -> Result<RobustReport, RobustError> {
        robust_throughput_with_caps(
            &self.model,
            &shifted(&self.base_caps, delta_b),
            self.q,
            &self.opts,
        )
    }
}

impl RobustObjective for ThroughputObjective {
    fn dim(&self) -> usize {
        self.base_caps.len()
    }

    fn evaluate(&self, delta_b: &[f64]) -> Result<(f64, Vec<f64>), RobustError> {
        let caps = shifted(&self.base_caps, delta_b);
        let rep = robust_throughput_with_caps(&self.model, &caps, self.q, &self.opts)?;
        let g = worst_scenario_subgradient(&rep, &caps)?;
        Ok((rep.min_form_value(), g))
    }
}

/// Robust linear latency at `b0 + δb`. The routed load and the normalization
/// are those of the base network.
pub struct LatencyObjective {
    evaluator: RobustLatency,
    base_caps: Vec<f64>,
    opts: RobustOptions,
}

impl LatencyObjective {
    pub fn new(
        net: &Network,
        d: &DemandMatrix,
        q: usize,
        cfg: &LatencyConfig,
        opts: RobustOptions,
    ) -> Result<Self, RobustError> {
        Ok(Self {
            evaluator: RobustLatency::new(net, d, q, cfg, LatencyReference::Robust, &opts)?,
            base_caps: net.capacities(),
            opts,
        })
    }

    pub fn report(&self, delta_b: &[f64]) -> Result<RobustReport, RobustError> {
        self.evaluator
            .evaluate(&shifted(&self.base_caps, delta_b), &self.opts)
    }
}

impl RobustObjective for LatencyObjective {
    fn dim(&self) -> usize {
        self.base_caps.len()
    }

    fn evaluate(&self, delta_b: &[f64]) -> Result<(f64, Vec<f64>), RobustError> {
        let caps = shifted(&self.base_caps, delta_b);
        let rep = self.evaluator.evaluate(&caps, &self.opts)?;
        let g = worst_scenario_subgradient(&rep, &caps)?;
        Ok((rep.min_form_value(), g))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub point: Vec<f64>,
    /// Objective (minimization form) at `point`.
    pub value: f64,
    /// Best value seen so far.
    pub best_value: f64,
    /// Cutting plane only: optimal value of the master LP after this cut.
    pub lower_bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Stopping test met (stationary point, fixed point or closed gap).
    Converged,
    /// Ran out of iterations; the best point found is returned.
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct RobustifyResult {
    pub allocation: BudgetAllocation,
    /// Best objective value at `allocation`. Minimization form from the
    /// generic drivers; the throughput wrappers return robust throughput.
    pub value: f64,
    /// Per-iteration trace, always in minimization form.
    pub history: Vec<HistoryEntry>,
    pub termination: Termination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    CuttingPlane,
    Subgradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterSettings {
    pub method: Method,
    /// Iteration cap for either method.
    pub max_iters: usize,
    pub tol: f64,
    /// Initial step `γ0` of `γ_t = γ0 / sqrt(t + 1)`; `None` uses the budget.
    pub gamma0: Option<f64>,
}

impl Default for OuterSettings {
    fn default() -> Self {
        Self {
            method: Method::CuttingPlane,
            max_iters: 200,
            tol: 1e-7,
            gamma0: None,
        }
    }
}

fn check_budget(budget: f64) -> Result<(), RobustError> {
    if !(budget >= 0.0 && budget.is_finite()) {
        return Err(crate::flow::FlowError::InvalidConfig(format!(
            "budget must be finite and non-negative, got {budget}"
        ))
        .into());
    }
    Ok(())
}

fn zero_budget<O: RobustObjective + ?Sized>(obj: &O) -> Result<RobustifyResult, RobustError> {
    let x = vec![0.0; obj.dim()];
    let (f, _) = obj.evaluate(&x)?;
    Ok(RobustifyResult {
        allocation: BudgetAllocation { delta_b: x.clone() },
        value: f,
        history: vec![HistoryEntry {
            iteration: 0,
            point: x,
            value: f,
            best_value: f,
            lower_bound: Some(f),
        }],
        termination: Termination::Converged,
    })
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Projected subgradient descent from `δb = 0` with steps
/// `γ_t = γ0 / sqrt(t + 1)`. Stops early at a zero subgradient or when the
/// projected step no longer moves the point.
pub fn subgradient_descent<O: RobustObjective + ?Sized>(
    obj: &O,
    budget: f64,
    steps: usize,
    gamma0: Option<f64>,
) -> Result<RobustifyResult, RobustError> {
    check_budget(budget)?;
    if budget == 0.0 {
        return zero_budget(obj);
    }
    let gamma0 = gamma0.unwrap_or(budget);
    let mut x = vec![0.0; obj.dim()];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut history = Vec::new();
    let mut termination = Termination::IterationLimit;
    for t in 0..steps.max(1) {
        let (f, g) = obj.evaluate(&x)?;
        if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best = Some((f, x.clone()));
        }
        history.push(HistoryEntry {
            iteration: t,
            point: x.clone(),
            value: f,
            best_value: best.as_ref().unwrap().0,
            lower_bound: None,
        });
        if g.iter().all(|&v| v == 0.0) {
            termination = Termination::Converged;
            break;
        }
        let gamma = gamma0 / ((t + 1) as f64).sqrt();
        let step: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - gamma * gi).collect();
        let next = project_budget_simplex(&step, budget);
        if inf_dist(&next, &x) <= 1e-12 {
            termination = Termination::Converged;
            break;
        }
        x = next;
    }
    let (value, point) = best.unwrap();
    Ok(RobustifyResult {
        allocation: BudgetAllocation { delta_b: point },
        value,
        history,
        termination,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub value: f64,
    pub subgradient: Vec<f64>,
    pub point: Vec<f64>,
}

/// Cutting-plane model `φ >= f_t + <g_t, x - x_t>` and its master LP.
///
/// Master variables: `φ⁺` (index 0) with `φ = φ⁺ + shift`, the allocation
/// `x` (indices `1..=m`), the budget slack (`m + 1`), then one slack per cut.
#[derive(Debug, Clone)]
pub struct CutModel {
    pub cuts: Vec<Cut>,
    pub master_tableau: Option<SimplexTableau>,
    /// Lower bound on the objective over the budget simplex; `φ⁺ = φ - shift`.
    pub shift: f64,
}

impl CutModel {
    /// Model value `max_t f_t + <g_t, x - x_t>` at `x`.
    pub fn model_value(&self, x: &[f64]) -> f64 {
        self.cuts
            .iter()
            .map(|c| {
                c.value
                    + c.subgradient
                        .iter()
                        .zip(x.iter().zip(&c.point))
                        .map(|(g, (a, b))| g * (a - b))
                        .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Row `g·x - φ⁺ <= shift - f + g·x_t` over `n_vars` master variables.
fn cut_row(cut: &Cut, shift: f64, n_vars: usize) -> (Vec<f64>, f64) {
    let mut a = vec![0.0; n_vars];
    a[0] = -1.0;
    a[1..=cut.subgradient.len()].copy_from_slice(&cut.subgradient);
    let gx: f64 = cut
        .subgradient
        .iter()
        .zip(&cut.point)
        .map(|(g, x)| g * x)
        .sum();
    (a, shift - cut.value + gx)
}

/// First master LP, built at the analytic optimum: minimizing the affine
/// first cut over the simplex puts the whole budget on the most negative
/// subgradient coordinate, or nothing if there is none.
fn first_master(cut: &Cut, budget: f64, shift: f64) -> Result<SimplexTableau, LpError> {
    let m = cut.subgradient.len();
    let n_vars = m + 3;
    let (a, b0) = cut_row(cut, shift, n_vars);
    let mut rows = vec![vec![0.0; n_vars], a];
    for j in 1..=m + 1 {
        rows[0][j] = 1.0;
    }
    rows[1][m + 2] = 1.0;
    let mut cost = vec![0.0; n_vars];
    cost[0] = 1.0;
    let lp = StandardFormLp::new(
        cost,
        DenseMatrix::from_rows(&rows),
        vec![budget, b0],
        vec![m + 1, m + 2],
    )?;
    let (j, gmin) = cut
        .subgradient
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one edge");
    let carrier = if gmin < 0.0 { 1 + j } else { m + 1 };
    let t = SimplexTableau::from_basis(&lp, &[carrier, 0])?;
    if t.is_optimal() {
        return Ok(t);
    }
    // rounding left a slightly negative entry; let the primal simplex settle it
    let limit = default_pivot_limit(&t);
    Ok(primal_simplex(t, limit)?.tableau)
}

/// Cutting-plane minimization of a convex piecewise-affine objective over
/// the budget simplex, starting at `δb = 0`.
///
/// Each iteration evaluates `f_t, g_t` at `x_t`, appends the cut to the
/// master tableau and re-optimizes it with the dual simplex. The master
/// minimizer is the next point. Stops when the point moves by at most `tol`
/// (max norm) or the gap between the best value and the master value is at
/// most `tol`.
pub fn cutting_plane<O: RobustObjective + ?Sized>(
    obj: &O,
    budget: f64,
    tol: f64,
    max_iters: usize,
) -> Result<(RobustifyResult, CutModel), RobustError> {
    check_budget(budget)?;
    let m = obj.dim();
    if budget == 0.0 {
        let res = zero_budget(obj)?;
        let model = CutModel {
            cuts: Vec::new(),
            master_tableau: None,
            shift: res.value,
        };
        return Ok((res, model));
    }
    let mut x = vec![0.0; m];
    let (f0, g0) = obj.evaluate(&x)?;
    let shift = f0 + budget * g0.iter().copied().fold(0.0, f64::min) - 1.0;
    let mut model = CutModel {
        cuts: Vec::new(),
        master_tableau: None,
        shift,
    };
    let mut best = (f0, x.clone());
    let mut history = Vec::new();
    let mut termination = Termination::IterationLimit;
    let mut pending = Some((f0, g0));

    for t in 0..max_iters.max(1) {
        let (f, g) = match pending.take() {
            Some(v) => v,
            None => obj.evaluate(&x)?,
        };
        if f < best.0 {
            best = (f, x.clone());
        }
        let cut = Cut {
            value: f,
            subgradient: g,
            point: x.clone(),
        };
        let tableau = match model.master_tableau.take() {
            None => first_master(&cut, budget, shift)?,
            Some(mut tab) => {
                let (a, b0) = cut_row(&cut, shift, tab.num_vars());
                tab.add_cut_row(&a, b0)?;
                let limit = default_pivot_limit(&tab);
                let out = dual_simplex(tab, limit)?;
                if out.status != SolveStatus::Optimal {
                    return Err(RobustError::Solver {
                        scenario: Vec::new(),
                        status: out.status,
                    });
                }
                out.tableau
            }
        };
        model.cuts.push(cut);
        let phi = tableau.objective() + shift;
        let vertex = tableau.vertex();
        let next: Vec<f64> = vertex[1..=m].iter().map(|v| v.max(0.0)).collect();
        model.master_tableau = Some(tableau);
        history.push(HistoryEntry {
            iteration: t,
            point: x.clone(),
            value: f,
            best_value: best.0,
            lower_bound: Some(phi),
        });
        if best.0 - phi <= tol || inf_dist(&next, &x) <= tol {
            termination = Termination::Converged;
            break;
        }
        x = next;
    }
    Ok((
        RobustifyResult {
            allocation: BudgetAllocation { delta_b: best.1 },
            value: best.0,
            history,
            termination,
        },
        model,
    ))
}

fn run_method<O: RobustObjective>(
    obj: &O,
    budget: f64,
    settings: &OuterSettings,
) -> Result<RobustifyResult, RobustError> {
    match settings.method {
        Method::CuttingPlane => Ok(cutting_plane(obj, budget, settings.tol, settings.max_iters)?.0),
        Method::Subgradient => {
            subgradient_descent(obj, budget, settings.max_iters, settings.gamma0)
        }
    }
}

/// Maximizes robust throughput over the budget by projected subgradient
/// descent. The returned value is the robust throughput (not negated).
pub fn robustify_throughput_subgradient(
    net: &Network,
    d: &DemandMatrix,
    q: usize,
    budget: f64,
    steps: usize,
    gamma0: Option<f64>,
    opts: &RobustOptions,
) -> Result<RobustifyResult, RobustError> {
    let obj = ThroughputObjective::new(net, d, q, opts.clone())?;
    let mut res = subgradient_descent(&obj, budget, steps, gamma0)?;
    res.value = -res.value;
    Ok(res)
}

/// Maximizes robust throughput over the budget by the cutting-plane method.
/// The returned value is the robust throughput (not negated); history and
/// cut model stay in minimization form.
pub fn robustify_throughput_cutting_plane(
    net: &Network,
    d: &DemandMatrix,
    q: usize,
    budget: f64,
    tol: f64,
    max_iters: usize,
    opts: &RobustOptions,
) -> Result<(RobustifyResult, CutModel), RobustError> {
    let obj = ThroughputObjective::new(net, d, q, opts.clone())?;
    let (mut res, model) = cutting_plane(&obj, budget, tol, max_iters)?;
    res.value = -res.value;
    Ok((res, model))
}

/// Robust throughput maximization with either method.
pub fn robustify_throughput(
    net: &Network,
    d: &DemandMatrix,
    q: usize,
    budget: f64,
    settings: &OuterSettings,
    opts: &RobustOptions,
) -> Result<RobustifyResult, RobustError> {
    let obj = ThroughputObjective::new(net, d, q, opts.clone())?;
    let mut res = run_method(&obj, budget, settings)?;
    res.value = -res.value;
    Ok(res)
}

/// Minimizes robust linear latency over the budget.
pub fn robustify_latency_linear(
    net: &Network,
    d: &DemandMatrix,
    q: usize,
    budget: f64,
    cfg: &LatencyConfig,
    settings: &OuterSettings,
    opts: &RobustOptions,
) -> Result<RobustifyResult, RobustError> {
    let obj = LatencyObjective::new(net, d, q, cfg, opts.clone())?;
    run_method(&obj, budget, settings)
}
