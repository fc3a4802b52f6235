//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use common::{
    corpus, cut_connectivity, load_balance_lp, lp_oracle, net_a, random_lp, CutOracle, OracleResult,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robustflow::flow::{solve_throughput_with_caps, FlowError};
use robustflow::ingest::{
    canonicalize_json, load_instance, parse_json_instance, serialize_instance, InstanceDocument,
    SourceFormat,
};
use robustflow::linalg::DenseMatrix;
use robustflow::lp::{solve_cold, SolveStatus, StandardFormLp};
use robustflow::robust::{cold_scenario_throughput, cold_scenario_throughput_two_phase};
use robustflow::robustify::{cutting_plane, ThroughputObjective};
use robustflow::{
    demand_edge_connectivity, load_balance_from_throughput, robust_throughput,
    robustify_throughput, Edge, Method, Network, OuterSettings, RobustError, RobustOptions,
    ThroughputModel,
};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

const LP_TOL: f64 = 1e-9;
const WARM_COLD_TOL: f64 = 1e-9;
const RECIPROCAL_TOL: f64 = 1e-9;
const FD_STEP: f64 = 1e-6;
const FD_TOL: f64 = 1e-5;
const ZERO_TOL: f64 = 1e-9;
const GRID_TOL: f64 = 1e-3;
const ALLOCATION_TOL: f64 = 0.02;
const GRID_STEP: f64 = 0.01;
const OUTER_BUDGET: f64 = 2.0;
const SUBGRADIENT_STEPS: usize = 2000;
const BOUND_TOL: f64 = 1e-7;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn lp_vs_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut opt, mut inf, mut unb) = (0, 0, 0);
    for i in 0..500 {
        let (a, b, c) = random_lp(&mut rng);
        let lp =
            StandardFormLp::new(c.clone(), DenseMatrix::from_rows(&a), b.clone(), vec![]).unwrap();
        let out = solve_cold(&lp, 100_000)
            .map_err(|e| format!("lp {i}: {e}"))?
            .outcome;
        match lp_oracle(&a, &b, &c) {
            OracleResult::Optimal(v) => {
                opt += 1;
                if out.status != SolveStatus::Optimal || (out.objective - v).abs() > LP_TOL {
                    return Err(format!(
                        "lp {i}: {:?} {} vs optimum {v}",
                        out.status, out.objective
                    ));
                }
            }
            OracleResult::Infeasible => {
                inf += 1;
                if out.status != SolveStatus::Infeasible {
                    return Err(format!("lp {i}: {:?} vs infeasible", out.status));
                }
            }
            OracleResult::Unbounded => {
                unb += 1;
                if out.status != SolveStatus::Unbounded {
                    return Err(format!("lp {i}: {:?} vs unbounded", out.status));
                }
            }
        }
    }
    Ok(format!(
        "500 LPs ({opt} optimal, {inf} infeasible, {unb} unbounded), tol {LP_TOL:e}"
    ))
}

fn warm_vs_cold() -> Outcome {
    let mut count = 0;
    let mut worst = 0.0f64;
    for inst in corpus() {
        let model = ThroughputModel::new(&inst.net, &inst.demands).map_err(|e| e.to_string())?;
        let caps = inst.net.capacities();
        for q in 1..=2.min(inst.net.n_edges()) {
            let rep = robust_throughput(&inst.net, &inst.demands, q, &RobustOptions::default())
                .map_err(|e| e.to_string())?;
            for r in &rep.records {
                let (cold, _) = cold_scenario_throughput_two_phase(&model, &caps, &r.scenario)
                    .map_err(|e| e.to_string())?;
                let warm = r
                    .value
                    .ok_or_else(|| format!("{} {:?} infeasible", inst.name, r.scenario))?;
                worst = worst.max((warm - cold).abs());
                count += 1;
            }
        }
    }
    if worst <= WARM_COLD_TOL {
        Ok(format!(
            "{count} scenarios, max |warm - cold| = {worst:.1e} <= {WARM_COLD_TOL:e}"
        ))
    } else {
        Err(format!("max |warm - cold| = {worst:e}"))
    }
}

fn load_balance_reciprocal() -> Outcome {
    let mut worst = 0.0f64;
    let instances = corpus();
    for inst in &instances {
        let sol =
            robustflow::solve_throughput(&inst.net, &inst.demands).map_err(|e| e.to_string())?;
        let (theta, _) = load_balance_from_throughput(&sol).map_err(|e| e.to_string())?;
        let (lp, _) = load_balance_lp(&inst.net, &inst.demands);
        let out = solve_cold(&lp, 100_000).map_err(|e| e.to_string())?.outcome;
        if out.status != SolveStatus::Optimal {
            return Err(format!("{}: load balance LP {:?}", inst.name, out.status));
        }
        if (theta - out.objective).abs() > RECIPROCAL_TOL * theta.max(1.0) {
            return Err(format!(
                "{}: θ from λ is {theta}, load balance LP gives {}",
                inst.name, out.objective
            ));
        }
        worst = worst.max((sol.lambda_star * out.objective - 1.0).abs());
    }
    if worst <= RECIPROCAL_TOL {
        Ok(format!(
            "{} instances, max |λ θ - 1| = {worst:.1e} <= {RECIPROCAL_TOL:e}",
            instances.len()
        ))
    } else {
        Err(format!("max |λ θ - 1| = {worst:e}"))
    }
}

fn fd_sensitivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pairs = 0;
    let mut worst = 0.0f64;
    for inst in corpus() {
        let model = ThroughputModel::new(&inst.net, &inst.demands).map_err(|e| e.to_string())?;
        for round in 0..5 {
            let caps: Vec<f64> = if round == 0 {
                inst.net.capacities()
            } else {
                inst.net
                    .capacities()
                    .iter()
                    .map(|b| b * rng.gen_range(0.5..2.0))
                    .collect()
            };
            let sol = solve_throughput_with_caps(&model, &caps).map_err(|e| e.to_string())?;
            for e in 0..caps.len() {
                let stays = [FD_STEP, -FD_STEP].iter().all(|&delta| {
                    let mut t = sol.tableau.clone();
                    t.tighten_rhs(e, delta).is_ok() && t.is_primal_feasible()
                });
                if !stays {
                    continue;
                }
                let lam = |b: f64| {
                    let mut c = caps.clone();
                    c[e] = b;
                    solve_throughput_with_caps(&model, &c).map(|s| s.lambda_star)
                };
                let up = lam(caps[e] + FD_STEP).map_err(|e| e.to_string())?;
                let down = lam(caps[e] - FD_STEP).map_err(|e| e.to_string())?;
                let fd = -(up - down) / (2.0 * FD_STEP);
                let s = sol.tableau.rhs_sensitivity(e).map_err(|e| e.to_string())?;
                worst = worst.max((fd - s).abs());
                pairs += 1;
            }
        }
    }
    if pairs < 100 {
        Err(format!(
            "only {pairs} (instance, edge) pairs with a stable basis"
        ))
    } else if worst > FD_TOL {
        Err(format!("max |fd - sensitivity| = {worst:e}"))
    } else {
        Ok(format!(
            "{pairs} pairs, max |fd - sensitivity| = {worst:.1e} <= {FD_TOL:e}"
        ))
    }
}

/// Canonical representative of an arc set under permutations of vertices
/// 2, 3 and 4; bit `i` of `mask` selects `arcs[i]`.
fn is_canonical(mask: u32, arcs: &[(usize, usize)]) -> bool {
    const PERMS: [[usize; 3]; 5] = [[2, 4, 3], [3, 2, 4], [3, 4, 2], [4, 2, 3], [4, 3, 2]];
    for p in PERMS {
        let map = |v: usize| if v < 2 { v } else { p[v - 2] };
        let mut image = 0u32;
        for (i, &(t, h)) in arcs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                let j = arcs.iter().position(|&a| a == (map(t), map(h))).unwrap();
                image |= 1 << j;
            }
        }
        if image < mask {
            return false;
        }
    }
    true
}

fn connectivity_zero_law() -> Outcome {
    let n = 5;
    let arcs: Vec<(usize, usize)> = (0..n)
        .flat_map(|t| (0..n).filter(move |&h| h != t).map(move |h| (t, h)))
        .collect();
    let mut graphs = 0;
    let mut disconnected = 0;
    for mask in 1u32..1 << arcs.len() {
        let k = mask.count_ones();
        if k > 7 || !is_canonical(mask, &arcs) {
            continue;
        }
        let edges: Vec<Edge> = (0..arcs.len())
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| Edge {
                tail: arcs[i].0,
                head: arcs[i].1,
                capacity: 1.0 + (i % 3) as f64,
                delay: 0.0,
            })
            .collect();
        let net = Network::new(n, edges).unwrap();
        let d = robustflow::DemandMatrix::from_pairs(n, &[(0, 1, 1.0)]).unwrap();
        let kappa = cut_connectivity(&net, 0, 1);
        if demand_edge_connectivity(&net, &d).map_err(|e| e.to_string())? != kappa {
            return Err(format!(
                "arc set {mask:#x}: connectivity disagrees with cut enumeration ({kappa})"
            ));
        }
        graphs += 1;
        for q in 1..=2usize {
            if q > net.n_edges() {
                continue;
            }
            let lam = match robust_throughput(&net, &d, q, &RobustOptions::default()) {
                Ok(rep) => rep.worst_value,
                Err(RobustError::Flow(FlowError::InfeasibleSystem)) => {
                    disconnected += 1;
                    0.0
                }
                Err(e) => return Err(format!("arc set {mask:#x}, q={q}: {e}")),
            };
            let zero = lam <= ZERO_TOL;
            if zero != (q >= kappa) {
                return Err(format!(
                    "arc set {mask:#x}, q={q}: λ = {lam}, connectivity {kappa}"
                ));
            }
        }
    }
    Ok(format!(
        "{graphs} arc sets on 5 vertices (up to relabeling), q in {{1,2}}, {disconnected} weakly disconnected"
    ))
}

fn subgradient_settings() -> OuterSettings {
    OuterSettings {
        method: Method::Subgradient,
        max_iters: SUBGRADIENT_STEPS,
        ..OuterSettings::default()
    }
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Corpus instances with at most 4 edges and a single demand pair, with
/// every `q <= 2` that does not exceed the edge count.
fn small_cases() -> Vec<(common::Instance, usize)> {
    corpus()
        .into_iter()
        .filter(|inst| inst.net.n_edges() <= 4 && inst.single_pair().is_some())
        .flat_map(|inst| {
            let qs: Vec<usize> = (0..=2.min(inst.net.n_edges())).collect();
            qs.into_iter().map(move |q| (inst.clone(), q))
        })
        .collect()
}

fn outer_optimum() -> Outcome {
    let a = net_a();
    let opts = RobustOptions::default();
    let target = [0.0, 1.0];
    for (label, settings) in [
        ("cutting plane", OuterSettings::default()),
        ("subgradient", subgradient_settings()),
    ] {
        let res = robustify_throughput(&a.net, &a.demands, 1, 1.0, &settings, &opts)
            .map_err(|e| e.to_string())?;
        if (res.value - 0.75).abs() > GRID_TOL {
            return Err(format!("NET-A {label}: λ = {}, want 0.75", res.value));
        }
        if inf_dist(&res.allocation.delta_b, &target) > ALLOCATION_TOL {
            return Err(format!(
                "NET-A {label}: δb = {:?}, want (0, 1)",
                res.allocation.delta_b
            ));
        }
    }
    let mut runs = 0;
    let mut worst = 0.0f64;
    for (inst, q) in small_cases() {
        let (s, t, dem) = inst.single_pair().unwrap();
        let (grid, _) =
            CutOracle::new(&inst.net, s, t, dem, q).grid_optimum(OUTER_BUDGET, GRID_STEP);
        for (label, settings) in [
            ("cutting plane", OuterSettings::default()),
            ("subgradient", subgradient_settings()),
        ] {
            let res =
                robustify_throughput(&inst.net, &inst.demands, q, OUTER_BUDGET, &settings, &opts)
                    .map_err(|e| e.to_string())?;
            let gap = (res.value - grid).abs();
            if gap > GRID_TOL {
                return Err(format!(
                    "{} q={q} {label}: {} vs grid {grid}",
                    inst.name, res.value
                ));
            }
            worst = worst.max(gap);
            runs += 1;
        }
    }
    Ok(format!(
        "NET-A λ 0.75 and δb (0, 1) by both methods; {runs} runs on small instances, max |outer - grid| = {worst:.1e} <= {GRID_TOL:e}"
    ))
}

fn lower_bounds() -> Outcome {
    let mut runs = 0;
    let mut iterations = 0;
    for (inst, q) in small_cases() {
        let (s, t, dem) = inst.single_pair().unwrap();
        let obj = ThroughputObjective::new(&inst.net, &inst.demands, q, RobustOptions::default())
            .map_err(|e| e.to_string())?;
        let (res, _) = cutting_plane(&obj, OUTER_BUDGET, 1e-7, 200).map_err(|e| e.to_string())?;
        // the grid maximizes λ; in minimization form the optimum is its negation
        let (grid, _) =
            CutOracle::new(&inst.net, s, t, dem, q).grid_optimum(OUTER_BUDGET, GRID_STEP);
        let mut prev = f64::NEG_INFINITY;
        for h in &res.history {
            let phi = h.lower_bound.unwrap_or(f64::NAN);
            if phi.is_nan() || phi < prev - BOUND_TOL {
                return Err(format!(
                    "{} q={q} iteration {}: bound fell from {prev} to {phi}",
                    inst.name, h.iteration
                ));
            }
            if phi > -grid + BOUND_TOL {
                return Err(format!(
                    "{} q={q} iteration {}: bound {phi} above optimum {}",
                    inst.name, h.iteration, -grid
                ));
            }
            prev = phi;
            iterations += 1;
        }
        runs += 1;
    }
    Ok(format!("{runs} runs, {iterations} iterations, bounds non-decreasing and at most the grid optimum + {BOUND_TOL:e}"))
}

fn warm_pivots_on_hexring() -> Outcome {
    let doc = load_instance(&data("hexring.txt"), None).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let rep = robust_throughput(&doc.network, &doc.demands, 1, &RobustOptions::default())
        .map_err(|e| e.to_string())?;
    let warm_time = start.elapsed();
    let model = ThroughputModel::new(&doc.network, &doc.demands).map_err(|e| e.to_string())?;
    let caps = doc.network.capacities();
    let start = Instant::now();
    let mut cold = 0;
    for r in &rep.records {
        let (v, p) =
            cold_scenario_throughput(&model, &caps, &r.scenario).map_err(|e| e.to_string())?;
        if (v - r.value.unwrap_or(f64::NAN)).abs() > WARM_COLD_TOL {
            return Err(format!("{:?}: warm {:?} vs cold {v}", r.scenario, r.value));
        }
        cold += p;
    }
    let cold_time = start.elapsed();
    let warm = rep.pivots_total;
    if warm <= cold {
        Ok(format!(
            "{} scenarios, warm {warm} pivots ({warm_time:.1?}) <= cold {cold} pivots ({cold_time:.1?})",
            rep.records.len()
        ))
    } else {
        Err(format!("warm {warm} pivots > cold {cold}"))
    }
}

fn round_trips() -> Outcome {
    let mut docs = 0;
    for inst in corpus() {
        let n = inst.net.n_vertices();
        let doc = InstanceDocument {
            name: inst.name.clone(),
            network: inst.net.clone(),
            demands: inst.demands.clone(),
            source_format: SourceFormat::Json,
            node_names: (0..n).map(|i| i.to_string()).collect(),
            coordinates: vec![None; n],
            link_pairs: Vec::new(),
        };
        let text = serialize_instance(&doc);
        let back = parse_json_instance(&text).map_err(|e| e.to_string())?;
        if back != doc || canonicalize_json(&text).map_err(|e| e.to_string())? != text {
            return Err(format!("{} does not round-trip", inst.name));
        }
        docs += 1;
    }
    let min = load_instance(&data("minimal.txt"), None).map_err(|e| e.to_string())?;
    if min.network.n_edges() != 2 * min.link_pairs.len() || min.link_pairs.len() != 1 {
        return Err(format!(
            "minimal SNDlib file: {} edges from {} links",
            min.network.n_edges(),
            min.link_pairs.len()
        ));
    }
    let hex = load_instance(&data("hexring.txt"), None).map_err(|e| e.to_string())?;
    if hex.network.n_edges() != 2 * hex.link_pairs.len() {
        return Err("hexring: edge count is not twice the link count".into());
    }
    Ok(format!(
        "{docs} JSON documents round-trip; SNDlib files give 2 x links edges ({} and {})",
        min.network.n_edges(),
        hex.network.n_edges()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("lp-solver-vs-brute-force", lp_vs_brute_force),
        ("warm-start-matches-cold", warm_vs_cold),
        ("load-balance-reciprocal", load_balance_reciprocal),
        ("capacity-sensitivity", fd_sensitivity),
        ("connectivity-zero-law", connectivity_zero_law),
        ("outer-optimum", outer_optimum),
        ("cutting-plane-bounds", lower_bounds),
        ("warm-pivots-below-cold", warm_pivots_on_hexring),
        ("ingest-round-trip", round_trips),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail} [{:.2?}]", i + 1, start.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail} [{:.2?}]", i + 1, start.elapsed());
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
