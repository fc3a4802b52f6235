//! Directed multigraphs, demand matrices and the linear algebra of the flow
//! balance equations.

use crate::linalg::{greedy_row_basis, DenseMatrix, RANK_TOL};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("edge {edge}: capacity must be positive and finite, got {capacity}")]
    NonPositiveCapacity { edge: usize, capacity: f64 },
    #[error("edge {edge}: delay coefficient must be non-negative and finite, got {delay}")]
    NegativeDelay { edge: usize, delay: f64 },
    #[error("edge {edge}: self-loop at vertex {vertex}")]
    SelfLoop { edge: usize, vertex: usize },
    #[error("edge {edge}: vertex {vertex} out of range (n = {n})")]
    VertexOutOfRange {
        edge: usize,
        vertex: usize,
        n: usize,
    },
    #[error("demand ({from}, {to}) is invalid: {reason}")]
    InvalidDemand {
        from: usize,
        to: usize,
        reason: &'static str,
    },
    #[error("demand matrix has no positive entry")]
    NoDemand,
    #[error("demand matrix is {got}x{got}, network has {expected} vertices")]
    SizeMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub capacity: f64,
    pub delay: f64,
}

/// Directed multigraph with per-edge capacity and delay coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    n_vertices: usize,
    edges: Vec<Edge>,
}

impl Network {
    pub fn new(n_vertices: usize, edges: Vec<Edge>) -> Result<Self, NetworkError> {
        for (i, e) in edges.iter().enumerate() {
            for v in [e.tail, e.head] {
                if v >= n_vertices {
                    return Err(NetworkError::VertexOutOfRange {
                        edge: i,
                        vertex: v,
                        n: n_vertices,
                    });
                }
            }
            if e.tail == e.head {
                return Err(NetworkError::SelfLoop {
                    edge: i,
                    vertex: e.tail,
                });
            }
            if !(e.capacity > 0.0 && e.capacity.is_finite()) {
                return Err(NetworkError::NonPositiveCapacity {
                    edge: i,
                    capacity: e.capacity,
                });
            }
            if !(e.delay >= 0.0 && e.delay.is_finite()) {
                return Err(NetworkError::NegativeDelay {
                    edge: i,
                    delay: e.delay,
                });
            }
        }
        Ok(Self { n_vertices, edges })
    }

    /// Convenience constructor from `(tail, head, capacity)` triples with zero delay.
    pub fn from_arcs(
        n_vertices: usize,
        arcs: &[(usize, usize, f64)],
    ) -> Result<Self, NetworkError> {
        Self::new(
            n_vertices,
            arcs.iter()
                .map(|&(tail, head, capacity)| Edge {
                    tail,
                    head,
                    capacity,
                    delay: 0.0,
                })
                .collect(),
        )
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.capacity).collect()
    }

    pub fn delays(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.delay).collect()
    }

    /// Same topology with the given delay coefficients.
    pub fn with_delays(&self, delays: &[f64]) -> Result<Self, NetworkError> {
        assert_eq!(delays.len(), self.n_edges());
        let edges = self
            .edges
            .iter()
            .zip(delays)
            .map(|(e, &delay)| Edge { delay, ..*e })
            .collect();
        Self::new(self.n_vertices, edges)
    }

    /// Same topology with the given (positive) capacities.
    pub fn with_capacities(&self, caps: &[f64]) -> Result<Self, NetworkError> {
        assert_eq!(caps.len(), self.n_edges());
        let edges = self
            .edges
            .iter()
            .zip(caps)
            .map(|(e, &capacity)| Edge { capacity, ..*e })
            .collect();
        Self::new(self.n_vertices, edges)
    }
}

/// Non-negative `n x n` demand matrix with zero diagonal; `d[s][t]` is the
/// amount to be sent from `s` to `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DemandMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            d: vec![0.0; n * n],
        }
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, usize, f64)]) -> Result<Self, NetworkError> {
        let mut dm = Self::zeros(n);
        for &(s, t, v) in pairs {
            dm.add(s, t, v)?;
        }
        Ok(dm)
    }

    /// Adds `value` to the demand from `s` to `t`.
    pub fn add(&mut self, s: usize, t: usize, value: f64) -> Result<(), NetworkError> {
        if s >= self.n || t >= self.n {
            return Err(NetworkError::InvalidDemand {
                from: s,
                to: t,
                reason: "vertex out of range",
            });
        }
        if s == t {
            return Err(NetworkError::InvalidDemand {
                from: s,
                to: t,
                reason: "diagonal entries must be zero",
            });
        }
        if !(value >= 0.0 && value.is_finite()) {
            return Err(NetworkError::InvalidDemand {
                from: s,
                to: t,
                reason: "value must be non-negative and finite",
            });
        }
        self.d[s * self.n + t] += value;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.d[s * self.n + t]
    }

    /// `1ᵀ D 1`.
    pub fn total(&self) -> f64 {
        self.d.iter().sum()
    }

    pub fn has_positive(&self) -> bool {
        self.d.iter().any(|&v| v > 0.0)
    }

    /// Positive entries in row-major order.
    pub fn positive_pairs(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for s in 0..self.n {
            for t in 0..self.n {
                let v = self.get(s, t);
                if v > 0.0 {
                    out.push((s, t, v));
                }
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            d: self.d.iter().map(|v| v * factor).collect(),
        }
    }

    pub(crate) fn check_size(&self, net: &Network) -> Result<(), NetworkError> {
        if self.n != net.n_vertices() {
            return Err(NetworkError::SizeMismatch {
                expected: net.n_vertices(),
                got: self.n,
            });
        }
        Ok(())
    }
}

/// Laplacian of a demand matrix. Column `s` holds minus the balance
/// right-hand sides of commodity `s`, so the demand constraints read
/// `N F = -L_D`. Not symmetric in general.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandLaplacian(pub DenseMatrix);

impl DemandLaplacian {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.0
    }
}

/// Vertex-by-edge incidence matrix: `+1` at the head, `-1` at the tail.
///
/// With this sign convention `(N F)_{i s}` is inflow minus outflow of
/// commodity `s` at vertex `i`.
pub fn incidence_matrix(net: &Network) -> DenseMatrix {
    let mut n = DenseMatrix::zeros(net.n_vertices(), net.n_edges());
    for (e, edge) in net.edges().iter().enumerate() {
        n[(edge.head, e)] += 1.0;
        n[(edge.tail, e)] -= 1.0;
    }
    n
}

/// `L[i][s] = -d_si` for `i != s`, `L[s][s] = sum_k d_sk`.
pub fn demand_laplacian(d: &DemandMatrix) -> DemandLaplacian {
    let n = d.n();
    let mut l = DenseMatrix::zeros(n, n);
    for s in 0..n {
        for i in 0..n {
            if i != s {
                let v = d.get(s, i);
                l[(i, s)] -= v;
                l[(s, s)] += v;
            }
        }
    }
    DemandLaplacian(l)
}

/// Balance equations with linearly dependent rows removed.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    /// Kept vertex rows, ascending.
    pub rows: Vec<usize>,
    pub incidence: DenseMatrix,
    pub laplacian: DenseMatrix,
    /// Whether every left-kernel vector of the incidence matrix annihilates
    /// the Laplacian; if not, no flow satisfies `N F = -L_D`.
    pub feasible: bool,
}

/// Keeps the lowest-index maximal set of independent incidence rows and
/// checks consistency of the dropped rows against the Laplacian.
pub fn rank_reduce(incidence: &DenseMatrix, laplacian: &DemandLaplacian) -> ReducedSystem {
    let l = laplacian.matrix();
    assert_eq!(
        incidence.rows(),
        l.rows(),
        "incidence and Laplacian row counts differ"
    );
    let basis = greedy_row_basis(incidence, RANK_TOL);
    let scale = l.max_abs().max(1.0);
    let feasible = basis.left_kernel.iter().all(|y| {
        (0..l.cols()).all(|s| {
            let dot: f64 = (0..l.rows()).map(|i| y[i] * l[(i, s)]).sum();
            dot.abs() <= RANK_TOL * scale
        })
    });
    ReducedSystem {
        incidence: incidence.select_rows(&basis.kept),
        laplacian: l.select_rows(&basis.kept),
        rows: basis.kept,
        feasible,
    }
}

/// Minimum number of edges whose removal disconnects some demand pair: the
/// smallest unit-capacity max-flow value over all `(s, t)` with `d_st > 0`.
pub fn demand_edge_connectivity(net: &Network, d: &DemandMatrix) -> Result<usize, NetworkError> {
    d.check_size(net)?;
    let pairs = d.positive_pairs();
    if pairs.is_empty() {
        return Err(NetworkError::NoDemand);
    }
    Ok(pairs
        .iter()
        .map(|&(s, t, _)| unit_max_flow(net, s, t, &[]))
        .min()
        .unwrap())
}

/// Edge-disjoint `s`-`t` path count (unit capacities), ignoring the edges in
/// `removed`.
pub fn unit_max_flow(net: &Network, s: usize, t: usize, removed: &[usize]) -> usize {
    let n = net.n_vertices();
    // residual graph: arcs stored in pairs (forward, backward)
    let mut head = Vec::new();
    let mut cap = Vec::new();
    let mut adj = vec![Vec::new(); n];
    for (e, edge) in net.edges().iter().enumerate() {
        if removed.contains(&e) {
            continue;
        }
        adj[edge.tail].push(head.len());
        head.push(edge.head);
        cap.push(1i64);
        adj[edge.head].push(head.len());
        head.push(edge.tail);
        cap.push(0i64);
    }
    let mut flow = 0;
    loop {
        let mut pred = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &adj[u] {
                let v = head[a];
                if cap[a] > 0 && !seen[v] {
                    seen[v] = true;
                    pred[v] = a;
                    queue.push_back(v);
                }
            }
        }
        if !seen[t] {
            return flow;
        }
        let mut v = t;
        while v != s {
            let a = pred[v];
            cap[a] -= 1;
            cap[a ^ 1] += 1;
            v = head[a ^ 1];
        }
        flow += 1;
    }
}
