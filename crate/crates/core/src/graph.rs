//! Undirected weighted communication networks, their weighted incidence
//! matrix and the spectral constant `lambda2(B0^T B0)` used by the gain bounds.
//!
//! Nodes are 0-based internally; the experiment config uses 1-based indices
//! (see [`Network::from_one_based`]).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalues above this threshold count as positive.
pub const TOL_EIG: f64 = 1e-9;

/// One undirected edge `{i, j}` with `i < j` and weight `a_ij > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Undirected weighted graph. Edges are kept sorted lexicographically by
/// `(i, j)`, which fixes the column order of the incidence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    node_count: usize,
    edges: Vec<Edge>,
    // neighbors[i] = [(j, a_ij)] sorted by j
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl Network {
    /// Builds a network from 0-based `(i, j, weight)` triples. Endpoints are
    /// normalised so that `i < j`.
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidNetwork("node count must be positive".into()));
        }
        let mut list = Vec::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::InvalidNetwork(format!("self-loop at node {}", a + 1)));
            }
            if a >= node_count || b >= node_count {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({}, {}) references a node outside 1..={node_count}",
                    a + 1,
                    b + 1
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({}, {}) has non-positive weight {w}",
                    a + 1,
                    b + 1
                )));
            }
            list.push(Edge { i: a.min(b), j: a.max(b), weight: w });
        }
        list.sort_by_key(|e| (e.i, e.j));
        if let Some(w) = list.windows(2).find(|w| w[0].i == w[1].i && w[0].j == w[1].j) {
            return Err(Error::InvalidNetwork(format!(
                "duplicate edge ({}, {})",
                w[0].i + 1,
                w[0].j + 1
            )));
        }
        let mut neighbors = vec![Vec::new(); node_count];
        for e in &list {
            neighbors[e.i].push((e.j, e.weight));
            neighbors[e.j].push((e.i, e.weight));
        }
        for n in &mut neighbors {
            n.sort_by_key(|&(j, _)| j);
        }
        Ok(Self { node_count, edges: list, neighbors })
    }

    /// Builds a network from the config's 1-based `[i, j, weight]` triples.
    pub fn from_one_based(node_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut zero = Vec::with_capacity(edges.len());
        for &(i, j, w) in edges {
            if i == 0 || j == 0 {
                return Err(Error::InvalidNetwork("node indices are 1-based".into()));
            }
            zero.push((i - 1, j - 1, w));
        }
        Self::new(node_count, zero)
    }

    /// Circulant graph: node `i` linked to `i ± s (mod n)` for every offset `s`.
    pub fn circulant(node_count: usize, offsets: &[usize], weight: f64) -> Result<Self> {
        let mut set = std::collections::BTreeSet::new();
        for i in 0..node_count {
            for &s in offsets {
                let j = (i + s) % node_count;
                if i != j {
                    set.insert((i.min(j), i.max(j)));
                }
            }
        }
        Self::new(node_count, set.into_iter().map(|(i, j)| (i, j, weight)))
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `i` with their weights, sorted by neighbor index.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    pub fn max_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).fold(0.0, f64::max)
    }

    /// Edges as 1-based triples, the config representation.
    pub fn to_one_based(&self) -> Vec<(usize, usize, f64)> {
        self.edges.iter().map(|e| (e.i + 1, e.j + 1, e.weight)).collect()
    }

    pub fn connectivity(&self) -> Connectivity {
        connectivity_check(self)
    }

    /// Fails with [`Error::Disconnected`] unless the graph has one component.
    pub fn ensure_connected(&self) -> Result<()> {
        let c = self.connectivity();
        if c.connected {
            Ok(())
        } else {
            Err(Error::Disconnected { components: c.components_one_based() })
        }
    }

    /// Weighted Laplacian with edge weights `a_ij^2`, i.e. `B0 B0^T`.
    pub fn squared_weight_laplacian(&self) -> DMatrix<f64> {
        let n = self.node_count;
        let mut l = DMatrix::zeros(n, n);
        for e in &self.edges {
            let w = e.weight * e.weight;
            l[(e.i, e.i)] += w;
            l[(e.j, e.j)] += w;
            l[(e.i, e.j)] -= w;
            l[(e.j, e.i)] -= w;
        }
        l
    }
}

/// Result of [`connectivity_check`]: component label per node (0-based labels
/// assigned in order of the smallest node in each component).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connectivity {
    pub connected: bool,
    pub labels: Vec<usize>,
}

impl Connectivity {
    pub fn component_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    /// Components as lists of 1-based node indices.
    pub fn components_one_based(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.component_count()];
        for (node, &label) in self.labels.iter().enumerate() {
            out[label].push(node + 1);
        }
        out
    }
}

/// Labels connected components by breadth-first search. A single node with
/// no edges counts as connected.
pub fn connectivity_check(net: &Network) -> Connectivity {
    let n = net.node_count();
    let mut labels = vec![usize::MAX; n];
    let mut next = 0;
    let mut queue = std::collections::VecDeque::new();
    for start in 0..n {
        if labels[start] != usize::MAX {
            continue;
        }
        labels[start] = next;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in net.neighbors(u) {
                if labels[v] == usize::MAX {
                    labels[v] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    Connectivity { connected: next == 1, labels }
}

/// Dense weighted incidence matrix `B0` (N x m). Column `k` for edge
/// `{i, j}`, `i < j`, holds `+a_ij` at row `i` and `-a_ij` at row `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    pub b0: DMatrix<f64>,
}

impl IncidenceMatrix {
    /// `(B0^T ⊗ I_n) x` for stacked per-agent states: one difference vector
    /// `a_ij (x_i - x_j)` per edge.
    pub fn edge_differences(&self, net: &Network, states: &[DVector<f64>]) -> Vec<DVector<f64>> {
        net.edges()
            .iter()
            .map(|e| (&states[e.i] - &states[e.j]) * e.weight)
            .collect()
    }
}

pub fn build_incidence(net: &Network) -> Result<IncidenceMatrix> {
    if net.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    net.ensure_connected()?;
    let mut b0 = DMatrix::zeros(net.node_count(), net.edge_count());
    for (k, e) in net.edges().iter().enumerate() {
        b0[(e.i, k)] = e.weight;
        b0[(e.j, k)] = -e.weight;
    }
    Ok(IncidenceMatrix { b0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInfo {
    /// Smallest eigenvalue of `B0^T B0` above [`TOL_EIG`].
    pub lambda2: f64,
    /// All eigenvalues of `B0^T B0`, ascending.
    pub eigenvalues: Vec<f64>,
}

pub fn lambda2_pos(inc: &IncidenceMatrix) -> Result<SpectralInfo> {
    let gram = inc.b0.transpose() * &inc.b0;
    let eigenvalues = sorted_eigenvalues(gram);
    let lambda2 = eigenvalues
        .iter()
        .copied()
        .find(|&v| v > TOL_EIG)
        .ok_or(Error::SpectrallyDegenerate { tol: TOL_EIG })?;
    Ok(SpectralInfo { lambda2, eigenvalues })
}

pub(crate) fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}
