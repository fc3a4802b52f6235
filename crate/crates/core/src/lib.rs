//! Multi-commodity flow on capacitated directed networks: maximal concurrent
//! throughput, load balance and average latency, their worst case under `q`
//! edge failures, and budgeted capacity augmentation against that worst case.
//!
//! All LPs run on a dense tableau simplex engine ([`lp`]) that supports warm
//! starts: the failure enumeration tightens capacities in place and
//! re-optimizes with the dual simplex instead of solving each scenario anew.

pub mod flow;
pub mod ingest;
pub mod linalg;
pub mod lp;
pub mod network;
pub mod robust;
pub mod robustify;

pub use flow::{
    build_throughput_tableau, eval_latency, load_balance_from_throughput, solve_latency_linear,
    solve_throughput, FlowError, FlowMatrix, FlowVarMap, LatencyConfig, LatencyKind,
    ThroughputModel, ThroughputSolution,
};
pub use network::{demand_edge_connectivity, DemandMatrix, Edge, Network, NetworkError};
pub use robust::{
    enumerate_scenarios, robust_latency_linear, robust_throughput, worst_scenario_subgradient,
    FailureScenario, RobustError, RobustOptions, RobustReport,
};
pub use robustify::{
    project_budget_simplex, robustify_latency_linear, robustify_throughput,
    robustify_throughput_cutting_plane, robustify_throughput_subgradient, BudgetAllocation, Method,
    OuterSettings, RobustifyResult,
};
