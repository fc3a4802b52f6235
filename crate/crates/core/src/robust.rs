//! Worst case over edge-failure scenarios.
//!
//! Scenarios are subsets of exactly `q` failure units (single edges, or
//! groups of edges that fail together). They are visited as a depth-first
//! tree: a child removes one more unit than its parent, so its LP differs
//! from the parent's in the capacity right-hand sides only. Each child clones
//! the parent's optimal tableau, zeroes the new capacities with
//! [`SimplexTableau::tighten_rhs`] and re-optimizes with the dual simplex.
//!
//! Top-level subtrees are independent and run on a rayon pool. Results are
//! concatenated in lexicographic order, so the outcome does not depend on the
//! schedule.

use crate::flow::{
    solve_throughput_with_caps, FlowError, LatencyConfig, LatencyKind, LatencyModel,
    ThroughputModel,
};
use crate::lp::{
    default_pivot_limit, dual_simplex, solve_cold, LpError, SimplexTableau, SolveStatus,
};
use crate::network::{DemandMatrix, Network};
use rayon::prelude::*;
use std::time::{Duration, Instant};
use thiserror::Error;

/// Refuse exhaustive enumeration above this many scenarios unless overridden.
pub const DEFAULT_MAX_SCENARIOS: u128 = 1_000_000;

/// Values this close count as ties when picking the worst scenario.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RobustError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("cannot fail {q} units out of {units}")]
    TooManyFailures { q: usize, units: usize },
    #[error("{count} scenarios exceed the enumeration limit {limit}")]
    TooManyScenarios { count: u128, limit: u128 },
    #[error("failure unit {unit} references edge {edge}, network has {n_edges} edges")]
    BadUnit {
        unit: usize,
        edge: usize,
        n_edges: usize,
    },
    #[error("{} scenario(s) leave no throughput, first failing edges {:?}", scenarios.len(), scenarios.first().map(|s| s.edges()).unwrap_or(&[]))]
    ScenarioInfeasible { scenarios: Vec<FailureScenario> },
    #[error("scenario {scenario:?} stopped with status {status:?}")]
    Solver {
        scenario: Vec<usize>,
        status: SolveStatus,
    },
    #[error("worst-scenario tableau was not retained")]
    NoTableau,
    #[error("capacity vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Sorted set of deleted edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FailureScenario {
    deleted_edges: Vec<usize>,
}

impl FailureScenario {
    pub fn new(mut edges: Vec<usize>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        Self {
            deleted_edges: edges,
        }
    }

    pub fn edges(&self) -> &[usize] {
        &self.deleted_edges
    }

    pub fn len(&self) -> usize {
        self.deleted_edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deleted_edges.is_empty()
    }

    pub fn contains(&self, edge: usize) -> bool {
        self.deleted_edges.binary_search(&edge).is_ok()
    }
}

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All `k`-subsets of `0..n` in lexicographic order.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        // rightmost position that can still move
        match (0..k).rev().find(|&i| next[i] < self.n - k + i) {
            Some(i) => {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
            }
            None => self.current = None,
        }
        Some(out)
    }
}

/// Single-edge failure scenarios of size `q` over `m` edges, lexicographic.
pub fn enumerate_scenarios(m: usize, q: usize) -> impl Iterator<Item = FailureScenario> {
    Combinations::new(m, q).map(FailureScenario::new)
}

/// Which edges fail together. Each unit is a non-empty list of edge indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureUnits {
    units: Vec<Vec<usize>>,
}

impl FailureUnits {
    pub fn singletons(m: usize) -> Self {
        Self {
            units: (0..m).map(|e| vec![e]).collect(),
        }
    }

    /// Arbitrary groups; each must be non-empty.
    pub fn grouped(units: Vec<Vec<usize>>) -> Self {
        Self {
            units: units.into_iter().filter(|u| !u.is_empty()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn unit(&self, i: usize) -> &[usize] {
        &self.units[i]
    }

    fn validate(&self, m: usize) -> Result<(), RobustError> {
        for (i, u) in self.units.iter().enumerate() {
            if let Some(&e) = u.iter().find(|&&e| e >= m) {
                return Err(RobustError::BadUnit {
                    unit: i,
                    edge: e,
                    n_edges: m,
                });
            }
        }
        Ok(())
    }

    fn scenario(&self, chosen: &[usize]) -> FailureScenario {
        FailureScenario::new(
            chosen
                .iter()
                .flat_map(|&u| self.units[u].iter().copied())
                .collect(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct RobustOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    /// Scenario count above which enumeration is refused.
    pub max_scenarios: u128,
    /// Ignore `max_scenarios`.
    pub allow_large: bool,
    /// Failure grouping; `None` means every edge fails on its own.
    pub units: Option<FailureUnits>,
}

impl Default for RobustOptions {
    fn default() -> Self {
        Self {
            workers: None,
            max_scenarios: DEFAULT_MAX_SCENARIOS,
            allow_large: false,
            units: None,
        }
    }
}

/// Which extremum is the worst case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorstCase {
    /// Throughput: smaller is worse.
    Min,
    /// Latency: larger is worse.
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRecord {
    pub scenario: FailureScenario,
    /// Scenario value in natural units (λ for throughput, latency for latency);
    /// `None` if the scenario LP is infeasible.
    pub value: Option<f64>,
    /// Dual simplex pivots spent on the last step into this scenario.
    pub pivots: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct RobustReport {
    pub sense: WorstCase,
    pub q: usize,
    pub worst_value: f64,
    pub worst_scenario: FailureScenario,
    /// One record per scenario, lexicographic in the chosen failure units.
    pub records: Vec<ScenarioRecord>,
    /// Pivots of the nominal solve.
    pub root_pivots: usize,
    /// Dual simplex pivots over the whole scenario tree, inner nodes included.
    pub pivots_total: usize,
    pub scenarios_evaluated: usize,
    /// Capacities the evaluation started from.
    pub capacities: Vec<f64>,
    /// Optimal tableau of the worst scenario.
    pub worst_tableau: Option<SimplexTableau>,
}

impl RobustReport {
    /// Worst value in minimization form: `-λ` for throughput, latency as is.
    pub fn min_form_value(&self) -> f64 {
        match self.sense {
            WorstCase::Min => -self.worst_value,
            WorstCase::Max => self.worst_value,
        }
    }
}

/// Reads the scenario value off an optimal tableau.
type ValueOf = fn(&SimplexTableau) -> f64;

fn throughput_value(t: &SimplexTableau) -> f64 {
    (-t.objective()).max(0.0)
}

fn latency_value(t: &SimplexTableau) -> f64 {
    t.objective()
}

struct Tree<'a> {
    root: &'a SimplexTableau,
    caps: &'a [f64],
    units: &'a FailureUnits,
    q: usize,
    value_of: ValueOf,
}

#[derive(Default)]
struct SubtreeResult {
    records: Vec<ScenarioRecord>,
    pivots: usize,
}

impl Tree<'_> {
    /// Removes `unit` from the capacities of `t` and re-optimizes.
    fn step(
        &self,
        mut t: SimplexTableau,
        unit: usize,
        chosen: &[usize],
    ) -> Result<(SimplexTableau, SolveStatus, usize), RobustError> {
        for &e in self.units.unit(unit) {
            // an edge may sit in several units; zero it only once
            let already = chosen.iter().any(|&u| self.units.unit(u).contains(&e));
            if !already {
                t.tighten_rhs(e, self.caps[e])?;
            }
        }
        let limit = default_pivot_limit(&t);
        let out = dual_simplex(t, limit)?;
        match out.status {
            SolveStatus::Optimal | SolveStatus::Infeasible => {
                Ok((out.tableau, out.status, out.pivot_count))
            }
            status => {
                let mut path = chosen.to_vec();
                path.push(unit);
                Err(RobustError::Solver {
                    scenario: self.units.scenario(&path).deleted_edges,
                    status,
                })
            }
        }
    }

    /// Children of `t` that add a unit from `next..=last`.
    fn visit(
        &self,
        t: &SimplexTableau,
        chosen: &mut Vec<usize>,
        next: usize,
        last: usize,
        out: &mut SubtreeResult,
    ) -> Result<(), RobustError> {
        let remaining = self.q - chosen.len();
        for u in next..=last.min(self.units.len() - remaining) {
            let start = Instant::now();
            let (child, status, pivots) = self.step(t.clone(), u, chosen)?;
            out.pivots += pivots;
            chosen.push(u);
            if status == SolveStatus::Infeasible {
                // further deletions cannot restore feasibility
                self.mark_infeasible(chosen, u + 1, pivots, start.elapsed(), out);
            } else if remaining == 1 {
                out.records.push(ScenarioRecord {
                    scenario: self.units.scenario(chosen),
                    value: Some((self.value_of)(&child)),
                    pivots,
                    elapsed: start.elapsed(),
                });
            } else {
                self.visit(&child, chosen, u + 1, usize::MAX, out)?;
            }
            chosen.pop();
        }
        Ok(())
    }

    fn mark_infeasible(
        &self,
        chosen: &[usize],
        next: usize,
        pivots: usize,
        elapsed: Duration,
        out: &mut SubtreeResult,
    ) {
        let need = self.q - chosen.len();
        for rest in Combinations::new(self.units.len() - next, need) {
            let mut all = chosen.to_vec();
            all.extend(rest.into_iter().map(|r| r + next));
            out.records.push(ScenarioRecord {
                scenario: self.units.scenario(&all),
                value: None,
                pivots,
                elapsed,
            });
        }
    }

    fn run(&self, workers: Option<usize>) -> Result<SubtreeResult, RobustError> {
        if self.q == 0 {
            return Ok(SubtreeResult {
                records: vec![ScenarioRecord {
                    scenario: FailureScenario::default(),
                    value: Some((self.value_of)(self.root)),
                    pivots: 0,
                    elapsed: Duration::ZERO,
                }],
                pivots: 0,
            });
        }
        let tops: Vec<usize> = (0..=self.units.len() - self.q).collect();
        let subtree = |&u: &usize| -> Result<SubtreeResult, RobustError> {
            let mut out = SubtreeResult::default();
            self.visit(self.root, &mut Vec::with_capacity(self.q), u, u, &mut out)?;
            Ok(out)
        };
        let parts: Vec<Result<SubtreeResult, RobustError>> = match workers {
            Some(k) => rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .expect("thread pool")
                .install(|| tops.par_iter().map(subtree).collect()),
            None => tops.par_iter().map(subtree).collect(),
        };
        let mut all = SubtreeResult::default();
        for p in parts {
            let p = p?;
            all.pivots += p.pivots;
            all.records.extend(p.records);
        }
        Ok(all)
    }

    /// Optimal tableau of one scenario, replaying the tree path to it.
    fn replay(&self, chosen: &[usize]) -> Result<SimplexTableau, RobustError> {
        let mut t = self.root.clone();
        for i in 0..chosen.len() {
            t = self.step(t, chosen[i], &chosen[..i])?.0;
        }
        Ok(t)
    }
}

fn check_scenario_count(units: usize, q: usize, opts: &RobustOptions) -> Result<(), RobustError> {
    if q > units {
        return Err(RobustError::TooManyFailures { q, units });
    }
    let count = binomial(units, q);
    if !opts.allow_large && count > opts.max_scenarios {
        return Err(RobustError::TooManyScenarios {
            count,
            limit: opts.max_scenarios,
        });
    }
    Ok(())
}

/// Index of the worst record: first in order among values within
/// [`TIE_TOL`] of the extremum. Infeasible records are skipped.
fn pick_worst(records: &[ScenarioRecord], sense: WorstCase) -> Option<usize> {
    let key = |v: f64| match sense {
        WorstCase::Min => v,
        WorstCase::Max => -v,
    };
    let best = records
        .iter()
        .filter_map(|r| r.value)
        .map(key)
        .min_by(f64::total_cmp)?;
    records
        .iter()
        .position(|r| r.value.is_some_and(|v| key(v) <= best + TIE_TOL))
}

fn evaluate(
    root: &SimplexTableau,
    root_pivots: usize,
    caps: &[f64],
    q: usize,
    sense: WorstCase,
    value_of: ValueOf,
    opts: &RobustOptions,
) -> Result<RobustReport, RobustError> {
    let m = caps.len();
    let units = opts
        .units
        .clone()
        .unwrap_or_else(|| FailureUnits::singletons(m));
    units.validate(m)?;
    check_scenario_count(units.len(), q, opts)?;
    let tree = Tree {
        root,
        caps,
        units: &units,
        q,
        value_of,
    };
    let result = tree.run(opts.workers)?;
    let infeasible: Vec<FailureScenario> = result
        .records
        .iter()
        .filter(|r| r.value.is_none())
        .map(|r| r.scenario.clone())
        .collect();
    if !infeasible.is_empty() {
        return Err(RobustError::ScenarioInfeasible {
            scenarios: infeasible,
        });
    }
    let worst = pick_worst(&result.records, sense).expect("at least one scenario");
    // recover the unit path of the worst record: records are in combination order
    let path = Combinations::new(units.len(), q)
        .nth(worst)
        .expect("record index in range");
    let worst_tableau = tree.replay(&path)?;
    Ok(RobustReport {
        sense,
        q,
        worst_value: result.records[worst].value.unwrap(),
        worst_scenario: result.records[worst].scenario.clone(),
        scenarios_evaluated: result.records.len(),
        records: result.records,
        root_pivots,
        pivots_total: result.pivots,
        capacities: caps.to_vec(),
        worst_tableau: Some(worst_tableau),
    })
}

/// Worst-case throughput over all scenarios of `q` failures.
pub fn robust_throughput(
    net: &Network,
    d: &DemandMatrix,
    q: usize,
    opts: &RobustOptions,
) -> Result<RobustReport, RobustError> {
    let model = ThroughputModel::new(net, d)?;
    robust_throughput_with_caps(&model, &net.capacities(), q, opts)
}

/// [`robust_throughput`] on the model's topology with arbitrary capacities.
pub fn robust_throughput_with_caps(
    model: &ThroughputModel,
    caps: &[f64],
    q: usize,
    opts: &RobustOptions,
) -> Result<RobustReport, RobustError> {
    let nominal = solve_throughput_with_caps(model, caps)?;
    evaluate(
        &nominal.tableau,
        nominal.pivots,
        caps,
        q,
        WorstCase::Min,
        throughput_value,
        opts,
    )
}

/// Throughput of one scenario solved from scratch: capacities of deleted
/// edges set to zero, structured starting basis, primal simplex. Returns the
/// value and pivot count.
pub fn cold_scenario_throughput(
    model: &ThroughputModel,
    caps: &[f64],
    scenario: &FailureScenario,
) -> Result<(f64, usize), RobustError> {
    let mut caps = caps.to_vec();
    for &e in scenario.edges() {
        caps[e] = 0.0;
    }
    let sol = solve_throughput_with_caps(model, &caps)?;
    Ok((sol.lambda_star, sol.pivots))
}

/// Throughput of one scenario by the generic two-phase solver on the plain
/// standard form, independent of the structured basis.
pub fn cold_scenario_throughput_two_phase(
    model: &ThroughputModel,
    caps: &[f64],
    scenario: &FailureScenario,
) -> Result<(f64, usize), RobustError> {
    let mut caps = caps.to_vec();
    for &e in scenario.edges() {
        caps[e] = 0.0;
    }
    let lp = model.standard_form(&caps);
    let s = lp.num_rows() + lp.num_vars();
    let cold = solve_cold(&lp, 10 * s * s + 10)?;
    match cold.outcome.status {
        SolveStatus::Optimal => Ok(((-cold.outcome.objective).max(0.0), cold.total_pivots())),
        status => Err(RobustError::Solver {
            scenario: scenario.edges().to_vec(),
            status,
        }),
    }
}

/// Throughput level the latency load is scaled against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LatencyReference {
    /// Robust throughput at the same `q`, so that the load `β λ_ref D` can be
    /// routed in every scenario.
    #[default]
    Robust,
    /// Nominal throughput; scenarios that cannot carry the load are reported
    /// as infeasible.
    Nominal,
}

/// Latency evaluator: the scaled demand and the normalization are fixed at
/// construction so the value is a function of capacities alone.
#[derive(Debug, Clone)]
pub struct RobustLatency {
    model: LatencyModel,
    q: usize,
}

impl RobustLatency {
    pub fn new(
        net: &Network,
        d: &DemandMatrix,
        q: usize,
        cfg: &LatencyConfig,
        reference: LatencyReference,
        opts: &RobustOptions,
    ) -> Result<Self, RobustError> {
        cfg.validate()?;
        if cfg.kind != LatencyKind::Linear {
            return Err(
                FlowError::InvalidConfig("robust latency requires linear latency".into()).into(),
            );
        }
        let tmodel = ThroughputModel::new(net, d)?;
        let caps = net.capacities();
        let lambda_ref = match reference {
            LatencyReference::Nominal => solve_throughput_with_caps(&tmodel, &caps)?.lambda_star,
            LatencyReference::Robust => {
                let rep = robust_throughput_with_caps(&tmodel, &caps, q, opts)?;
                if rep.worst_value <= TIE_TOL {
                    let scenarios = rep
                        .records
                        .iter()
                        .filter(|r| r.value.is_some_and(|v| v <= TIE_TOL))
                        .map(|r| r.scenario.clone())
                        .collect();
                    return Err(RobustError::ScenarioInfeasible { scenarios });
                }
                rep.worst_value
            }
        };
        let scale = cfg.beta * lambda_ref;
        let normalization = scale * d.total();
        if !(normalization > 0.0) {
            return Err(FlowError::ZeroThroughput.into());
        }
        Ok(Self {
            model: LatencyModel::new(net, d, scale, normalization)?,
            q,
        })
    }

    pub fn model(&self) -> &LatencyModel {
        &self.model
    }

    pub fn evaluate(
        &self,
        caps: &[f64],
        opts: &RobustOptions,
    ) -> Result<RobustReport, RobustError> {
        let nominal = match self.model.solve(caps) {
            Ok(s) => s,
            Err(FlowError::InfeasibleSystem) => {
                return Err(RobustError::ScenarioInfeasible {
                    scenarios: vec![FailureScenario::default()],
                })
            }
            Err(e) => return Err(e.into()),
        };
        evaluate(
            &nominal.tableau,
            nominal.pivots,
            caps,
            self.q,
            WorstCase::Max,
            latency_value,
            opts,
        )
    }
}

/// Worst-case average linear latency over all scenarios of `q` failures.
///
/// The load is `β λ_ref D` with `λ_ref` the robust throughput at the same
/// `q` (see [`LatencyReference`]).
pub fn robust_latency_linear(
    net: &Network,
    d: &DemandMatrix,
    q: usize,
    cfg: &LatencyConfig,
    opts: &RobustOptions,
) -> Result<RobustReport, RobustError> {
    RobustLatency::new(net, d, q, cfg, LatencyReference::Robust, opts)?
        .evaluate(&net.capacities(), opts)
}

/// Subgradient of the min-form robust value with respect to the capacities,
/// read from the worst scenario's optimal tableau. Components of deleted
/// edges are zero.
pub fn worst_scenario_subgradient(
    report: &RobustReport,
    b_current: &[f64],
) -> Result<Vec<f64>, RobustError> {
    let t = report
        .worst_tableau
        .as_ref()
        .ok_or(RobustError::NoTableau)?;
    if b_current.len() != report.capacities.len() {
        return Err(RobustError::LengthMismatch {
            expected: report.capacities.len(),
            got: b_current.len(),
        });
    }
    (0..b_current.len())
        .map(|e| {
            if report.worst_scenario.contains(e) {
                Ok(0.0)
            } else {
                Ok(t.rhs_sensitivity(e)?)
            }
        })
        .collect()
}
