//! Nominal flow problems: maximal concurrent flow (throughput), load balance,
//! and average latency.
//!
//! Variables of every flow LP share one numbering (see [`FlowVarMap`]):
//! per-edge per-source flows `F[e][s]` first, stored source by source, then
//! one capacity slack per edge, then (throughput only) the scale `lambda`.
//! The capacity inequality of edge `e` has constraint id `e`.

use crate::linalg::{greedy_column_basis, DenseMatrix, RANK_TOL};
use crate::lp::{
    default_pivot_limit, primal_simplex, solve_cold, LpError, SimplexTableau, SolveStatus,
    StandardFormLp,
};
use crate::network::{
    demand_laplacian, incidence_matrix, rank_reduce, DemandMatrix, Network, NetworkError,
    ReducedSystem,
};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("balance equations are inconsistent: some demand pair lies in different components")]
    InfeasibleSystem,
    #[error("reduced incidence matrix has no regular column block")]
    NoIndependentColumns,
    #[error("throughput is zero; load balance is unbounded")]
    ZeroThroughput,
    #[error("edge {edge} is saturated (flow {flow} >= capacity {capacity})")]
    SaturatedEdge {
        edge: usize,
        flow: f64,
        capacity: f64,
    },
    #[error("simplex stopped with status {0:?}")]
    Solver(SolveStatus),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("capacity vector has length {got}, expected {expected}")]
    CapacityLength { expected: usize, got: usize },
}

/// What a flow-LP variable stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowVar {
    Flow { edge: usize, source: usize },
    Slack { edge: usize },
    Lambda,
}

/// Index layout of flow LP variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowVarMap {
    pub n_vertices: usize,
    pub n_edges: usize,
    pub has_lambda: bool,
}

impl FlowVarMap {
    pub fn flow(&self, edge: usize, source: usize) -> usize {
        source * self.n_edges + edge
    }

    pub fn slack(&self, edge: usize) -> usize {
        self.n_vertices * self.n_edges + edge
    }

    pub fn lambda(&self) -> Option<usize> {
        self.has_lambda
            .then_some((self.n_vertices + 1) * self.n_edges)
    }

    pub fn num_vars(&self) -> usize {
        (self.n_vertices + 1) * self.n_edges + usize::from(self.has_lambda)
    }

    pub fn decode(&self, var: usize) -> Option<FlowVar> {
        let nm = self.n_vertices * self.n_edges;
        if var < nm {
            Some(FlowVar::Flow {
                edge: var % self.n_edges,
                source: var / self.n_edges,
            })
        } else if var < nm + self.n_edges {
            Some(FlowVar::Slack { edge: var - nm })
        } else if self.has_lambda && var == nm + self.n_edges {
            Some(FlowVar::Lambda)
        } else {
            None
        }
    }

    /// Extracts `F` from a full variable vector.
    pub fn flows(&self, x: &[f64]) -> FlowMatrix {
        let mut f = FlowMatrix::zeros(self.n_edges, self.n_vertices);
        for s in 0..self.n_vertices {
            for e in 0..self.n_edges {
                f.set(e, s, x[self.flow(e, s)].max(0.0));
            }
        }
        f
    }
}

/// Per-edge per-source flows, `m x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl FlowMatrix {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            data: vec![0.0; m * n],
        }
    }

    pub fn n_edges(&self) -> usize {
        self.m
    }

    pub fn n_sources(&self) -> usize {
        self.n
    }

    pub fn get(&self, edge: usize, source: usize) -> f64 {
        self.data[edge * self.n + source]
    }

    pub fn set(&mut self, edge: usize, source: usize, v: f64) {
        self.data[edge * self.n + source] = v;
    }

    /// `F 1`: total flow on each edge.
    pub fn edge_totals(&self) -> Vec<f64> {
        (0..self.m)
            .map(|e| (0..self.n).map(|s| self.get(e, s)).sum())
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            m: self.m,
            n: self.n,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn as_dense(&self) -> DenseMatrix {
        let rows: Vec<Vec<f64>> = (0..self.m)
            .map(|e| (0..self.n).map(|s| self.get(e, s)).collect())
            .collect();
        DenseMatrix::from_rows(&rows)
    }
}

fn check_caps(net: &Network, caps: &[f64]) -> Result<(), FlowError> {
    if caps.len() != net.n_edges() {
        return Err(FlowError::CapacityLength {
            expected: net.n_edges(),
            got: caps.len(),
        });
    }
    if caps.iter().any(|&b| !(b >= 0.0 && b.is_finite())) {
        return Err(FlowError::InvalidConfig(
            "capacities must be finite and non-negative".into(),
        ));
    }
    Ok(())
}

/// Reduced balance system plus the basis block needed for the initial
/// throughput tableau. Independent of the capacities, so one model serves
/// every capacity vector on the same topology and demand.
#[derive(Debug, Clone)]
pub struct ThroughputModel {
    var_map: FlowVarMap,
    reduced: ReducedSystem,
    eta: Vec<usize>,
    eta_bar: Vec<usize>,
    /// `Ñ_η⁻¹ Ñ_η̄`
    inv_nbar: DenseMatrix,
    /// `Ñ_η⁻¹ L̃_D`
    inv_l: DenseMatrix,
}

impl ThroughputModel {
    pub fn new(net: &Network, d: &DemandMatrix) -> Result<Self, FlowError> {
        d.check_size(net)?;
        if !d.has_positive() {
            return Err(NetworkError::NoDemand.into());
        }
        let reduced = rank_reduce(&incidence_matrix(net), &demand_laplacian(d));
        if !reduced.feasible {
            return Err(FlowError::InfeasibleSystem);
        }
        let eta = greedy_column_basis(&reduced.incidence, RANK_TOL);
        if eta.is_empty() || eta.len() != reduced.rows.len() {
            return Err(FlowError::NoIndependentColumns);
        }
        let eta_bar: Vec<usize> = (0..net.n_edges()).filter(|e| !eta.contains(e)).collect();
        let inv = reduced
            .incidence
            .select_columns(&eta)
            .inverse()
            .ok_or(FlowError::NoIndependentColumns)?;
        let inv_nbar = inv.matmul(&reduced.incidence.select_columns(&eta_bar));
        let inv_l = inv.matmul(&reduced.laplacian);
        Ok(Self {
            var_map: FlowVarMap {
                n_vertices: net.n_vertices(),
                n_edges: net.n_edges(),
                has_lambda: true,
            },
            reduced,
            eta,
            eta_bar,
            inv_nbar,
            inv_l,
        })
    }

    pub fn var_map(&self) -> FlowVarMap {
        self.var_map
    }

    /// Edge indices whose flows are basic in the initial tableau.
    pub fn eta(&self) -> &[usize] {
        &self.eta
    }

    pub fn reduced(&self) -> &ReducedSystem {
        &self.reduced
    }

    /// The primal-feasible starting tableau with basis `[vec(F_η*); β]` and
    /// non-basics `[vec(F_η̄*); λ]`, at the vertex `F = 0`, `β = b`.
    pub fn initial_tableau(&self, caps: &[f64]) -> SimplexTableau {
        let vm = self.var_map;
        let (n, m) = (vm.n_vertices, vm.n_edges);
        assert_eq!(caps.len(), m);
        let k = self.eta.len();
        let kb = self.eta_bar.len();
        let rows = k * n + m;
        let cols = kb * n + 1;
        let lam_col = kb * n;

        let mut basic = Vec::with_capacity(rows);
        for s in 0..n {
            basic.extend(self.eta.iter().map(|&e| vm.flow(e, s)));
        }
        basic.extend(self.eta.iter().map(|&e| vm.slack(e)));
        basic.extend(self.eta_bar.iter().map(|&e| vm.slack(e)));

        let mut nonbasic = Vec::with_capacity(cols);
        for s in 0..n {
            nonbasic.extend(self.eta_bar.iter().map(|&e| vm.flow(e, s)));
        }
        nonbasic.push(vm.lambda().unwrap());

        let mut body = vec![0.0; rows * cols];
        let mut rhs = vec![0.0; rows];
        // F_η rows: block diagonal over sources
        for s in 0..n {
            for i in 0..k {
                let r = s * k + i;
                for l in 0..kb {
                    body[r * cols + s * kb + l] = self.inv_nbar[(i, l)];
                }
                body[r * cols + lam_col] = self.inv_l[(i, s)];
            }
        }
        // β_η rows
        for i in 0..k {
            let r = n * k + i;
            for s in 0..n {
                for l in 0..kb {
                    body[r * cols + s * kb + l] = -self.inv_nbar[(i, l)];
                }
            }
            body[r * cols + lam_col] = -(0..n).map(|s| self.inv_l[(i, s)]).sum::<f64>();
            rhs[r] = caps[self.eta[i]];
        }
        // β_η̄ rows
        for (l, &e) in self.eta_bar.iter().enumerate() {
            let r = n * k + k + l;
            for s in 0..n {
                body[r * cols + s * kb + l] = 1.0;
            }
            rhs[r] = caps[e];
        }
        let mut cost_row = vec![0.0; cols];
        cost_row[lam_col] = -1.0;

        let slacks = (0..m).map(|e| vm.slack(e)).collect();
        SimplexTableau::new(basic, nonbasic, body, rhs, cost_row, 0.0, slacks)
            .expect("initial throughput tableau is well formed")
    }

    /// Throughput LP in plain standard form, for cold solves that do not use
    /// the structured starting basis.
    pub fn standard_form(&self, caps: &[f64]) -> StandardFormLp {
        let vm = self.var_map;
        let (n, m) = (vm.n_vertices, vm.n_edges);
        let rn = self.reduced.rows.len();
        let nv = vm.num_vars();
        let lam = vm.lambda().unwrap();
        let mut a = DenseMatrix::zeros(rn * n + m, nv);
        let mut b = vec![0.0; rn * n + m];
        let mut cost = vec![0.0; nv];
        cost[lam] = -1.0;
        // Ñ F_{*s} + λ L̃_{*s} = 0
        for s in 0..n {
            for r in 0..rn {
                let row = s * rn + r;
                for e in 0..m {
                    a[(row, vm.flow(e, s))] = self.reduced.incidence[(r, e)];
                }
                a[(row, lam)] = self.reduced.laplacian[(r, s)];
            }
        }
        for e in 0..m {
            let row = rn * n + e;
            for s in 0..n {
                a[(row, vm.flow(e, s))] = 1.0;
            }
            a[(row, vm.slack(e))] = 1.0;
            b[row] = caps[e];
        }
        StandardFormLp::new(cost, a, b, (0..m).map(|e| vm.slack(e)).collect())
            .expect("consistent dimensions")
    }
}

/// Builds the initial throughput tableau for `net` and `d`.
pub fn build_throughput_tableau(
    net: &Network,
    d: &DemandMatrix,
) -> Result<(SimplexTableau, FlowVarMap), FlowError> {
    let model = ThroughputModel::new(net, d)?;
    Ok((model.initial_tableau(&net.capacities()), model.var_map()))
}

#[derive(Debug, Clone)]
pub struct ThroughputSolution {
    pub lambda_star: f64,
    pub flows: FlowMatrix,
    pub tableau: SimplexTableau,
    pub var_map: FlowVarMap,
    pub pivots: usize,
}

impl ThroughputSolution {
    fn from_tableau(tableau: SimplexTableau, var_map: FlowVarMap, pivots: usize) -> Self {
        let x = tableau.vertex();
        Self {
            lambda_star: x[var_map.lambda().unwrap()].max(0.0),
            flows: var_map.flows(&x),
            tableau,
            var_map,
            pivots,
        }
    }
}

/// Maximal concurrent flow: the largest `λ` such that `λ D` can be routed
/// within the capacities.
pub fn solve_throughput(net: &Network, d: &DemandMatrix) -> Result<ThroughputSolution, FlowError> {
    let model = ThroughputModel::new(net, d)?;
    solve_throughput_with_caps(&model, &net.capacities())
}

/// Throughput on the model's topology with an arbitrary non-negative
/// capacity vector, solved by the primal simplex from the structured basis.
pub fn solve_throughput_with_caps(
    model: &ThroughputModel,
    caps: &[f64],
) -> Result<ThroughputSolution, FlowError> {
    if caps.len() != model.var_map.n_edges {
        return Err(FlowError::CapacityLength {
            expected: model.var_map.n_edges,
            got: caps.len(),
        });
    }
    if caps.iter().any(|&b| !(b >= 0.0 && b.is_finite())) {
        return Err(FlowError::InvalidConfig(
            "capacities must be finite and non-negative".into(),
        ));
    }
    let t = model.initial_tableau(caps);
    let limit = default_pivot_limit(&t);
    let out = primal_simplex(t, limit)?;
    match out.status {
        SolveStatus::Optimal => Ok(ThroughputSolution::from_tableau(
            out.tableau,
            model.var_map,
            out.pivot_count,
        )),
        other => Err(FlowError::Solver(other)),
    }
}

/// Optimal load balance from an optimal throughput solution:
/// `θ* = 1 / λ*`, flows scaled by `1 / λ*`.
pub fn load_balance_from_throughput(
    sol: &ThroughputSolution,
) -> Result<(f64, FlowMatrix), FlowError> {
    if sol.lambda_star <= 0.0 {
        return Err(FlowError::ZeroThroughput);
    }
    Ok((
        1.0 / sol.lambda_star,
        sol.flows.scaled(1.0 / sol.lambda_star),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatencyKind {
    /// `c_e f_e`
    Linear,
    /// `α_c c_e f_e / (1 - f_e / b_e)`
    Inverse,
    /// `c_e (1 - ln(1 - f_e / b_e))`
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyConfig {
    pub kind: LatencyKind,
    /// Load ratio relative to maximal throughput, in `(0, 1]`.
    pub beta: f64,
    /// Scale applied to the inverse latency to keep it in range near saturation.
    pub alpha_c: f64,
}

impl Default for LatencyConfig {
    fn default() -> Self {
        Self {
            kind: LatencyKind::Linear,
            beta: 0.9,
            alpha_c: 1e-6,
        }
    }
}

impl LatencyConfig {
    pub fn new(kind: LatencyKind, beta: f64, alpha_c: f64) -> Result<Self, FlowError> {
        let cfg = Self {
            kind,
            beta,
            alpha_c,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(FlowError::InvalidConfig(format!(
                "beta must lie in (0, 1], got {}",
                self.beta
            )));
        }
        if !(self.alpha_c > 0.0 && self.alpha_c.is_finite()) {
            return Err(FlowError::InvalidConfig(format!(
                "alpha_c must be positive, got {}",
                self.alpha_c
            )));
        }
        Ok(())
    }
}

/// Linear-latency LP: minimize `<c, F 1> / normalization` subject to
/// `F 1 <= caps` and `Ñ F = -demand_scale · L̃_D`.
#[derive(Debug, Clone)]
pub struct LatencyModel {
    var_map: FlowVarMap,
    reduced: ReducedSystem,
    delays: Vec<f64>,
    demand_scale: f64,
    normalization: f64,
}

impl LatencyModel {
    pub fn new(
        net: &Network,
        d: &DemandMatrix,
        demand_scale: f64,
        normalization: f64,
    ) -> Result<Self, FlowError> {
        d.check_size(net)?;
        if !(normalization > 0.0 && normalization.is_finite()) {
            return Err(FlowError::InvalidConfig(format!(
                "latency normalization must be positive, got {normalization}"
            )));
        }
        let reduced = rank_reduce(&incidence_matrix(net), &demand_laplacian(d));
        if !reduced.feasible {
            return Err(FlowError::InfeasibleSystem);
        }
        Ok(Self {
            var_map: FlowVarMap {
                n_vertices: net.n_vertices(),
                n_edges: net.n_edges(),
                has_lambda: false,
            },
            reduced,
            delays: net.delays(),
            demand_scale,
            normalization,
        })
    }

    pub fn var_map(&self) -> FlowVarMap {
        self.var_map
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn demand_scale(&self) -> f64 {
        self.demand_scale
    }

    pub fn standard_form(&self, caps: &[f64]) -> StandardFormLp {
        let vm = self.var_map;
        let (n, m) = (vm.n_vertices, vm.n_edges);
        let rn = self.reduced.rows.len();
        let nv = vm.num_vars();
        let mut a = DenseMatrix::zeros(rn * n + m, nv);
        let mut b = vec![0.0; rn * n + m];
        let mut cost = vec![0.0; nv];
        for s in 0..n {
            for e in 0..m {
                cost[vm.flow(e, s)] = self.delays[e] / self.normalization;
            }
            for r in 0..rn {
                let row = s * rn + r;
                for e in 0..m {
                    a[(row, vm.flow(e, s))] = self.reduced.incidence[(r, e)];
                }
                b[row] = -self.demand_scale * self.reduced.laplacian[(r, s)];
            }
        }
        for e in 0..m {
            let row = rn * n + e;
            for s in 0..n {
                a[(row, vm.flow(e, s))] = 1.0;
            }
            a[(row, vm.slack(e))] = 1.0;
            b[row] = caps[e];
        }
        StandardFormLp::new(cost, a, b, (0..m).map(|e| vm.slack(e)).collect())
            .expect("consistent dimensions")
    }

    /// Cold two-phase solve at the given capacities.
    pub fn solve(&self, caps: &[f64]) -> Result<LatencySolution, FlowError> {
        let lp = self.standard_form(caps);
        let limit = {
            let s = lp.num_rows() + lp.num_vars();
            10 * s * s + 10
        };
        let cold = solve_cold(&lp, limit)?;
        let out = cold.outcome;
        match out.status {
            SolveStatus::Optimal => {
                let x = out.tableau.vertex();
                Ok(LatencySolution {
                    latency: out.objective,
                    flows: self.var_map.flows(&x),
                    tableau: out.tableau,
                    var_map: self.var_map,
                    normalization: self.normalization,
                    pivots: cold.phase1_pivots + cold.phase2_pivots,
                })
            }
            SolveStatus::Infeasible => Err(FlowError::InfeasibleSystem),
            other => Err(FlowError::Solver(other)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LatencySolution {
    /// Normalized optimal latency (total delay over total routed flow).
    pub latency: f64,
    pub flows: FlowMatrix,
    pub tableau: SimplexTableau,
    pub var_map: FlowVarMap,
    pub normalization: f64,
    pub pivots: usize,
}

/// Average linear latency at load `β λ_max`.
///
/// The normalization `β λ_max 1ᵀ D 1` is a constant of the problem, so the
/// LP minimizes `Σ_e c_e (F 1)_e` scaled by it.
pub fn solve_latency_linear(
    net: &Network,
    d: &DemandMatrix,
    cfg: &LatencyConfig,
    lambda_max: f64,
) -> Result<LatencySolution, FlowError> {
    cfg.validate()?;
    if cfg.kind != LatencyKind::Linear {
        return Err(FlowError::InvalidConfig(
            "only linear latency is solved as an LP".into(),
        ));
    }
    let scale = cfg.beta * lambda_max;
    let normalization = scale * d.total();
    if !(normalization > 0.0) {
        return Err(FlowError::InvalidConfig(format!(
            "load beta * lambda_max * 1'D1 must be positive, got {normalization}"
        )));
    }
    LatencyModel::new(net, d, scale, normalization)?.solve(&net.capacities())
}

/// Sum over edges of the per-edge delay for the given edge totals `F 1`.
pub fn eval_latency(
    flows_per_edge: &[f64],
    net: &Network,
    cfg: &LatencyConfig,
) -> Result<f64, FlowError> {
    check_caps(net, flows_per_edge).map_err(|_| {
        FlowError::InvalidConfig("edge flows must be finite and non-negative".into())
    })?;
    let mut total = 0.0;
    for (e, (edge, &f)) in net.edges().iter().zip(flows_per_edge).enumerate() {
        let (c, b) = (edge.delay, edge.capacity);
        total += match cfg.kind {
            LatencyKind::Linear => c * f,
            LatencyKind::Inverse | LatencyKind::Log if f >= b => {
                return Err(FlowError::SaturatedEdge {
                    edge: e,
                    flow: f,
                    capacity: b,
                })
            }
            LatencyKind::Inverse => cfg.alpha_c * c * f / (1.0 - f / b),
            LatencyKind::Log => c * (1.0 - (1.0 - f / b).ln()),
        };
    }
    Ok(total)
}
