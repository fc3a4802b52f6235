//! Shared instances and independent oracles for the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robustflow::linalg::DenseMatrix;
use robustflow::lp::StandardFormLp;
use robustflow::network::{unit_max_flow, DemandMatrix, Edge, Network};

#[derive(Clone)]
pub struct Instance {
    pub name: String,
    pub net: Network,
    pub demands: DemandMatrix,
}

impl Instance {
    fn new(name: &str, net: Network, demands: DemandMatrix) -> Self {
        Self {
            name: name.to_string(),
            net,
            demands,
        }
    }

    /// Single positive demand pair, if that is all there is.
    pub fn single_pair(&self) -> Option<(usize, usize, f64)> {
        let p = self.demands.positive_pairs();
        (p.len() == 1).then(|| p[0])
    }
}

pub fn net_a() -> Instance {
    Instance::new(
        "net-a",
        Network::from_arcs(2, &[(0, 1, 3.0), (0, 1, 2.0)]).unwrap(),
        DemandMatrix::from_pairs(2, &[(0, 1, 4.0)]).unwrap(),
    )
}

pub fn net_b() -> Instance {
    Instance::new(
        "net-b",
        Network::from_arcs(2, &[(0, 1, 3.0)]).unwrap(),
        DemandMatrix::from_pairs(2, &[(0, 1, 4.0)]).unwrap(),
    )
}

pub fn net_c() -> Instance {
    Instance::new(
        "net-c",
        Network::from_arcs(3, &[(0, 1, 1.0), (0, 2, 1.0), (2, 1, 1.0)])
            .unwrap()
            .with_delays(&[1.0, 10.0, 10.0])
            .unwrap(),
        DemandMatrix::from_pairs(3, &[(0, 1, 2.0)]).unwrap(),
    )
}

/// Random instance in which every demand pair has a directed path.
fn random_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    pairs: usize,
) -> Option<(Network, DemandMatrix)> {
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let tail = rng.gen_range(0..n);
        let head = rng.gen_range(0..n);
        if tail == head {
            continue;
        }
        edges.push(Edge {
            tail,
            head,
            capacity: rng.gen_range(1..=8) as f64 / 2.0,
            delay: rng.gen_range(0..=6) as f64,
        });
    }
    let net = Network::new(n, edges).unwrap();
    let mut d = DemandMatrix::zeros(n);
    for _ in 0..pairs {
        let s = rng.gen_range(0..n);
        let t = rng.gen_range(0..n);
        if s == t {
            continue;
        }
        d.add(s, t, rng.gen_range(1..=6) as f64 / 2.0).unwrap();
    }
    if !d.has_positive() {
        return None;
    }
    let reachable = d
        .positive_pairs()
        .iter()
        .all(|&(s, t, _)| unit_max_flow(&net, s, t, &[]) > 0);
    reachable.then_some((net, d))
}

/// NET-A, NET-B, NET-C and 20 deterministic random graphs with at most 6
/// vertices and 9 edges. The first eight random ones have at most 4 edges
/// and a single demand pair.
pub fn corpus() -> Vec<Instance> {
    let mut out = vec![net_a(), net_b(), net_c()];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f10e);
    let mut k = 0;
    while k < 20 {
        let (n, m, pairs) = if k < 8 {
            (rng.gen_range(2..=4), rng.gen_range(2..=4), 1)
        } else {
            (
                rng.gen_range(3..=6),
                rng.gen_range(5..=9),
                rng.gen_range(1..=3),
            )
        };
        if let Some((net, d)) = random_instance(&mut rng, n, m, pairs) {
            if k < 8 && d.positive_pairs().len() != 1 {
                continue;
            }
            out.push(Instance::new(&format!("random-{k:02}"), net, d));
            k += 1;
        }
    }
    out
}

/// Small dense linear algebra kept separate from the library's.
pub mod dense {
    /// Row-reduces `[a | b]`; returns the reduced independent rows or `None`
    /// if the system is inconsistent.
    pub fn independent_rows(a: &[Vec<f64>], b: &[f64]) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        let n = a.first().map_or(0, |r| r.len());
        let mut rows: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
        let mut kept = Vec::new();
        let mut col = 0;
        while !rows.is_empty() && col < n {
            let (piv, (r, _)) = rows
                .iter()
                .enumerate()
                .max_by(|x, y| x.1 .0[col].abs().total_cmp(&y.1 .0[col].abs()))
                .unwrap();
            if r[col].abs() < 1e-10 {
                col += 1;
                continue;
            }
            let (pr, pb) = rows.swap_remove(piv);
            for (r, rb) in rows.iter_mut() {
                let f = r[col] / pr[col];
                if f != 0.0 {
                    for j in 0..n {
                        r[j] -= f * pr[j];
                    }
                    *rb -= f * pb;
                }
            }
            kept.push((pr, pb));
            col += 1;
        }
        if rows.iter().any(|(_, rb)| rb.abs() > 1e-9) {
            return None;
        }
        Some(kept.into_iter().unzip())
    }

    /// Solves the square system `m x = rhs`, `None` if singular.
    pub fn solve(m: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
        let n = m.len();
        let mut a: Vec<Vec<f64>> = m
            .iter()
            .zip(rhs)
            .map(|(r, &b)| {
                let mut r = r.clone();
                r.push(b);
                r
            })
            .collect();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
            if a[p][c].abs() < 1e-10 {
                return None;
            }
            a.swap(c, p);
            for i in 0..n {
                if i != c {
                    let f = a[i][c] / a[c][c];
                    if f != 0.0 {
                        for j in c..=n {
                            a[i][j] -= f * a[c][j];
                        }
                    }
                }
            }
        }
        Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
    }
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Minimum of `c x` over the basic feasible solutions of `a x = b, x >= 0`,
/// by enumerating every column basis. `None` if there is none.
pub fn bfs_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
    let (rows, rhs) = dense::independent_rows(a, b)?;
    let n = c.len();
    if rows.is_empty() {
        // every x >= 0 is feasible; the only basic solution is 0
        return Some(0.0);
    }
    let r = rows.len();
    let mut best: Option<f64> = None;
    for basis in combinations(n, r) {
        let m: Vec<Vec<f64>> = rows
            .iter()
            .map(|row| basis.iter().map(|&j| row[j]).collect())
            .collect();
        let Some(xb) = dense::solve(&m, &rhs) else {
            continue;
        };
        if xb.iter().any(|&v| v < -1e-9) {
            continue;
        }
        let v: f64 = basis.iter().zip(&xb).map(|(&j, x)| c[j] * x).sum();
        best = Some(best.map_or(v, |bv: f64| bv.min(v)));
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleResult {
    Infeasible,
    Unbounded,
    Optimal(f64),
}

/// Brute-force solution of `min c x, a x = b, x >= 0`. Unboundedness is
/// decided on the ray polytope `{d >= 0, a d = 0, 1ᵀd = 1}`: the LP is
/// unbounded iff it is feasible and some ray has `c d < 0`.
pub fn lp_oracle(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> OracleResult {
    let Some(v) = bfs_min(a, b, c) else {
        return OracleResult::Infeasible;
    };
    let mut ra: Vec<Vec<f64>> = a.to_vec();
    ra.push(vec![1.0; c.len()]);
    let mut rb = vec![0.0; a.len()];
    rb.push(1.0);
    match bfs_min(&ra, &rb, c) {
        Some(ray) if ray < -1e-9 => OracleResult::Unbounded,
        _ => OracleResult::Optimal(v),
    }
}

/// All `s`-side vertex sets of `s`-`t` cuts.
fn st_cuts(n: usize, s: usize, t: usize) -> Vec<Vec<bool>> {
    let others: Vec<usize> = (0..n).filter(|&v| v != s && v != t).collect();
    (0..1usize << others.len())
        .map(|mask| {
            let mut side = vec![false; n];
            side[s] = true;
            for (i, &v) in others.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    side[v] = true;
                }
            }
            side
        })
        .collect()
}

/// Robust single-pair throughput as an explicit minimum of affine functions
/// of the capacities: for each scenario and each `s`-`t` cut, the cut's
/// surviving edges. Max-flow/min-cut makes this exact.
pub struct CutOracle {
    /// edge sets, one per (scenario, cut)
    terms: Vec<Vec<usize>>,
    demand: f64,
    base: Vec<f64>,
}

impl CutOracle {
    pub fn new(net: &Network, s: usize, t: usize, demand: f64, q: usize) -> Self {
        let m = net.n_edges();
        let cuts = st_cuts(net.n_vertices(), s, t);
        let mut terms = Vec::new();
        for scenario in combinations(m, q) {
            for side in &cuts {
                let term: Vec<usize> = (0..m)
                    .filter(|e| !scenario.contains(e))
                    .filter(|&e| {
                        let edge = &net.edges()[e];
                        side[edge.tail] && !side[edge.head]
                    })
                    .collect();
                terms.push(term);
            }
        }
        terms.sort();
        terms.dedup();
        Self {
            terms,
            demand,
            base: net.capacities(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|term| term.iter().map(|&e| self.base[e] + x[e]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
            / self.demand
    }

    /// Grid search over `{x >= 0, 1ᵀx = budget}` at `step * budget`, then
    /// repeated local grids at a tenth of the spacing around the incumbent.
    /// Throughput is monotone in capacity, so the full-budget face suffices.
    pub fn grid_optimum(&self, budget: f64, step: f64) -> (f64, Vec<f64>) {
        let m = self.base.len();
        let k = (1.0 / step).round() as usize;
        let mut best = (f64::NEG_INFINITY, vec![0.0; m]);
        let mut point = vec![0usize; m];
        compositions(k, m, &mut point, 0, &mut |p| {
            let x: Vec<f64> = p.iter().map(|&v| v as f64 * budget / k as f64).collect();
            let v = self.value(&x);
            if v > best.0 + 1e-15 {
                best = (v, x);
            }
        });
        let mut h = budget / k as f64;
        for _ in 0..6 {
            let centre = best.1.clone();
            // local moves transfer budget between pairs of coordinates
            let radius = 10;
            for i in 0..m {
                for j in 0..m {
                    if i == j {
                        continue;
                    }
                    for r in 1..=radius {
                        let amount = r as f64 * h / radius as f64;
                        let mut x = centre.clone();
                        if x[j] < amount {
                            continue;
                        }
                        x[i] += amount;
                        x[j] -= amount;
                        let v = self.value(&x);
                        if v > best.0 + 1e-15 {
                            best = (v, x);
                        }
                    }
                }
            }
            // three-way moves catch optima where two coordinates must grow together
            for i in 0..m {
                for j in i + 1..m {
                    for l in 0..m {
                        if l == i || l == j {
                            continue;
                        }
                        for r in 1..=radius {
                            let amount = r as f64 * h / radius as f64;
                            let mut x = best.1.clone();
                            if x[l] < 2.0 * amount {
                                continue;
                            }
                            x[i] += amount;
                            x[j] += amount;
                            x[l] -= 2.0 * amount;
                            let v = self.value(&x);
                            if v > best.0 + 1e-15 {
                                best = (v, x);
                            }
                        }
                    }
                }
            }
            h /= 10.0;
        }
        best
    }
}

/// Calls `f` on every vector of `m` non-negative integers summing to `k`.
fn compositions(
    k: usize,
    m: usize,
    cur: &mut Vec<usize>,
    pos: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if pos == m - 1 {
        cur[pos] = k;
        f(cur);
        return;
    }
    for v in 0..=k {
        cur[pos] = v;
        compositions(k - v, m, cur, pos + 1, f);
    }
}

/// Minimal congestion `θ` such that `D` routes with edge loads `<= θ b_e`,
/// written out directly: one flow copy per source, then `θ`, then one slack
/// per edge.
pub fn load_balance_lp(net: &Network, d: &DemandMatrix) -> (StandardFormLp, Vec<usize>) {
    let n = net.n_vertices();
    let m = net.n_edges();
    let sources: Vec<usize> = (0..n)
        .filter(|&s| (0..n).any(|t| d.get(s, t) > 0.0))
        .collect();
    let k = sources.len();
    let theta = k * m;
    let vars = theta + 1 + m;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (si, &s) in sources.iter().enumerate() {
        for v in 0..n {
            let mut r = vec![0.0; vars];
            for (e, edge) in net.edges().iter().enumerate() {
                if edge.tail == v {
                    r[si * m + e] += 1.0;
                }
                if edge.head == v {
                    r[si * m + e] -= 1.0;
                }
            }
            rows.push(r);
            rhs.push(if v == s {
                (0..n).map(|t| d.get(s, t)).sum()
            } else {
                -d.get(s, v)
            });
        }
    }
    for (e, edge) in net.edges().iter().enumerate() {
        let mut r = vec![0.0; vars];
        for si in 0..k {
            r[si * m + e] = 1.0;
        }
        r[theta] = -edge.capacity;
        r[theta + 1 + e] = 1.0;
        rows.push(r);
        rhs.push(0.0);
    }
    let mut cost = vec![0.0; vars];
    cost[theta] = 1.0;
    (
        StandardFormLp::new(
            cost,
            DenseMatrix::from_rows(&rows),
            rhs,
            (theta + 1..vars).collect(),
        )
        .unwrap(),
        sources,
    )
}

/// Fewest edges whose removal separates `t` from `s`, by enumerating cuts.
pub fn cut_connectivity(net: &Network, s: usize, t: usize) -> usize {
    st_cuts(net.n_vertices(), s, t)
        .iter()
        .map(|side| {
            net.edges()
                .iter()
                .filter(|e| side[e.tail] && !side[e.head])
                .count()
        })
        .min()
        .unwrap_or(0)
}

/// Random equality-form LP, at most 4 rows and 6 columns, integer data in
/// `[-5, 5]`: `(A, b, c)`.
pub fn random_lp(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let rows = rng.gen_range(1..=4);
    let cols = rng.gen_range(1..=6);
    let a = (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(-5..=5) as f64).collect())
        .collect();
    let b = (0..rows).map(|_| rng.gen_range(-5..=5) as f64).collect();
    let c = (0..cols).map(|_| rng.gen_range(-5..=5) as f64).collect();
    (a, b, c)
}
