//! Small undirected graphs: connectivity, canonical forms and the random
//! edge-removal generator used for benchmark families.

use std::collections::HashSet;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub const N_VERTICES: usize = 7;
pub const FAMILY_SIZE: usize = 10;
/// Edge-removal walks attempted before a family is declared exhausted.
pub const RETRY_BUDGET: usize = 2000;

/// Simple undirected graph with edges stored as sorted `(u, v)`, `u < v`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Graph {
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n_vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_vertices == 0 || n_vertices > 31 {
            return domain(format!("vertex count {n_vertices} outside [1, 31]"));
        }
        let mut norm = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u == v || u >= n_vertices || v >= n_vertices {
                return domain(format!("invalid edge ({u}, {v}) for {n_vertices} vertices"));
            }
            norm.push((u.min(v), u.max(v)));
        }
        norm.sort_unstable();
        let before = norm.len();
        norm.dedup();
        if norm.len() != before {
            return domain("duplicate edge");
        }
        Ok(Graph { n_vertices, edges: norm })
    }

    pub fn complete(n_vertices: usize) -> Self {
        let edges = (0..n_vertices).tuple_combinations().collect();
        Graph { n_vertices, edges }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_connected(&self) -> bool {
        connected(self.n_vertices, &self.edges)
    }

    /// Smallest edge bitmask over all vertex relabellings.
    pub fn canonical_form(&self) -> u64 {
        let n = self.n_vertices;
        (0..n)
            .permutations(n)
            .map(|p| edge_mask(n, self.edges.iter().map(|&(u, v)| (p[u], p[v]))))
            .min()
            .unwrap_or(0)
    }

    pub fn is_isomorphic(&self, other: &Graph) -> bool {
        self.n_vertices == other.n_vertices
            && self.edge_count() == other.edge_count()
            && self.degree_sequence() == other.degree_sequence()
            && self.canonical_form() == other.canonical_form()
    }

    pub fn degree_sequence(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_vertices];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg.sort_unstable();
        deg
    }
}

fn pair_index(n: usize, u: usize, v: usize) -> usize {
    let (a, b) = (u.min(v), u.max(v));
    a * n - a * (a + 1) / 2 + (b - a - 1)
}

fn edge_mask(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> u64 {
    edges.fold(0u64, |m, (u, v)| m | 1 << pair_index(n, u, v))
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut seen = 1u32;
    loop {
        let mut next = seen;
        for &(u, v) in edges {
            if (seen >> u) & 1 == 1 || (seen >> v) & 1 == 1 {
                next |= 1 << u | 1 << v;
            }
        }
        if next == seen {
            return seen == (1u32 << n) - 1;
        }
        seen = next;
    }
}

/// Ten pairwise non-isomorphic connected graphs with a fixed edge count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFamily {
    pub n_vertices: usize,
    pub edge_count: usize,
    pub seed: u64,
    pub graphs: Vec<Graph>,
}

/// Builds a family by random edge removal from `K₇`, rejecting removals that
/// disconnect the graph and discarding isomorphic repeats.
pub fn generate_graph_family(edge_count: usize, seed: u64) -> Result<GraphFamily> {
    let n = N_VERTICES;
    let max_edges = n * (n - 1) / 2;
    if !(n - 1..=max_edges).contains(&edge_count) {
        return domain(format!("edge count must lie in [{}, {max_edges}], got {edge_count}", n - 1));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut graphs = Vec::new();
    for _ in 0..RETRY_BUDGET {
        let g = removal_walk(n, edge_count, &mut rng);
        if seen.insert(g.canonical_form()) {
            graphs.push(g);
            if graphs.len() == FAMILY_SIZE {
                return Ok(GraphFamily { n_vertices: n, edge_count, seed, graphs });
            }
        }
    }
    Err(Error::Exhausted { edges: edge_count, found: graphs.len(), wanted: FAMILY_SIZE })
}

fn removal_walk(n: usize, edge_count: usize, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Graph::complete(n).edges;
    while edges.len() > edge_count {
        let i = rng.random_range(0..edges.len());
        let removed = edges.swap_remove(i);
        if !connected(n, &edges) {
            // a connected graph with more than n-1 edges always has a non-bridge
            edges.push(removed);
            let last = edges.len() - 1;
            edges.swap(i, last);
        }
    }
    edges.sort_unstable();
    Graph { n_vertices: n, edges }
}
