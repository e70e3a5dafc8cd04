//! Undirected communication graphs and their matrix views.
//!
//! Node indices are 0-based everywhere inside the crate. Scenario files use
//! 1-based indices; [`build_graph`] is the single place that converts.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

/// Fixed undirected topology without self-loops or parallel edges.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    node_count: usize,
    /// Sorted, deduplicated, each pair stored as `(lo, hi)`.
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl NetworkGraph {
    /// Builds a graph from 0-based edge pairs. Duplicate pairs (in either
    /// orientation) collapse to a single edge.
    pub fn new(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidTopology("graph needs at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for &(i, j) in edges {
            if i == j {
                return Err(Error::InvalidTopology(format!("self-loop at node {}", i + 1)));
            }
            if i >= node_count || j >= node_count {
                return Err(Error::InvalidTopology(format!(
                    "edge ({}, {}) out of range for {} nodes",
                    i + 1,
                    j + 1,
                    node_count
                )));
            }
            set.insert((i.min(j), i.max(j)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); node_count];
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        Ok(Self {
            node_count,
            edges,
            neighbors,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbor list of node `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let n = self.node_count;
        let mut a = DMatrix::zeros(n, n);
        for &(i, j) in &self.edges {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }

    pub fn degree_matrix(&self) -> DMatrix<f64> {
        let d: Vec<f64> = self.degrees().into_iter().map(|d| d as f64).collect();
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d))
    }

    /// `L = D - A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        laplacian(self)
    }

    /// Breadth-first reachability from node 0.
    pub fn is_connected(&self) -> bool {
        is_connected(self)
    }

    /// Random connected graph: a uniformly random recursive spanning tree
    /// plus each remaining pair independently with probability `extra_edge_prob`.
    pub fn random_connected<R: Rng + ?Sized>(
        node_count: usize,
        extra_edge_prob: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut edges = Vec::new();
        for v in 1..node_count {
            let parent = rng.random_range(0..v);
            edges.push((parent, v));
        }
        for i in 0..node_count {
            for j in (i + 1)..node_count {
                if rng.random::<f64>() < extra_edge_prob {
                    edges.push((i, j));
                }
            }
        }
        Self::new(node_count, &edges)
    }
}

/// Builds a graph from 1-based index pairs as written in scenario files.
pub fn build_graph(node_count: usize, edges: &[(usize, usize)]) -> Result<NetworkGraph> {
    let mut zero_based = Vec::with_capacity(edges.len());
    for &(i, j) in edges {
        if i == 0 || j == 0 {
            return Err(Error::InvalidTopology(format!(
                "edge ({i}, {j}) uses index 0; node indices start at 1"
            )));
        }
        zero_based.push((i - 1, j - 1));
    }
    NetworkGraph::new(node_count, &zero_based)
}

pub fn laplacian(g: &NetworkGraph) -> DMatrix<f64> {
    let n = g.node_count;
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        l[(i, i)] = g.degree(i) as f64;
        for &j in g.neighbors(i) {
            l[(i, j)] = -1.0;
        }
    }
    l
}

pub fn is_connected(g: &NetworkGraph) -> bool {
    let mut seen = vec![false; g.node_count];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(u) = queue.pop_front() {
        for &v in g.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    reached == g.node_count
}
