//! Support graphs: components, acyclicity, girth and simple-path counts.

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

use crate::numerics::SparseSymmetricMatrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge ({0}, {1}) is invalid for {2} vertices")]
    InvalidEdge(usize, usize, usize),
    #[error("edge ({0}, {1}) listed twice")]
    DuplicateEdge(usize, usize),
}

/// Simple undirected graph on `0..dim` given by sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportGraph {
    adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl SupportGraph {
    /// Support of the off-diagonal entries of `m`.
    pub fn from_sparse(m: &SparseSymmetricMatrix) -> Self {
        let mut adj = vec![Vec::new(); m.dim()];
        for &(i, j, _) in m.entries() {
            adj[i].push(j);
            adj[j].push(i);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Self { adj, edge_count: m.edge_count() }
    }

    pub fn from_edges(dim: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut adj = vec![Vec::new(); dim];
        for &(i, j) in edges {
            if i >= dim || j >= dim || i == j {
                return Err(GraphError::InvalidEdge(i, j, dim));
            }
            adj[i].push(j);
            adj[j].push(i);
        }
        for (i, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::DuplicateEdge(i.min(w[0]), i.max(w[0])));
            }
        }
        Ok(Self { adj, edge_count: edges.len() })
    }

    pub fn dim(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].binary_search(&j).is_ok()
    }

    /// Edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(|(i, l)| l.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }
}

/// Connected components, ordered by their smallest vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentDecomposition {
    labels: Vec<usize>,
    components: Vec<Vec<usize>>,
    edge_counts: Vec<usize>,
}

impl ComponentDecomposition {
    pub fn component_of(&self, v: usize) -> usize {
        self.labels[v]
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn edge_count(&self, c: usize) -> usize {
        self.edge_counts[c]
    }

    /// A connected component is a tree exactly when it has one edge fewer than vertices.
    pub fn is_acyclic(&self, c: usize) -> bool {
        self.edge_counts[c] + 1 == self.components[c].len()
    }

    /// Size of the largest component.
    pub fn max_size(&self) -> usize {
        self.components.iter().map(Vec::len).max().unwrap_or(0)
    }
}

pub fn decompose(g: &SupportGraph) -> ComponentDecomposition {
    let n = g.dim();
    let mut labels = vec![usize::MAX; n];
    let mut components = Vec::new();
    let mut edge_counts = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if labels[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        let mut degree_sum = 0;
        labels[start] = id;
        stack.push(start);
        while let Some(u) = stack.pop() {
            degree_sum += g.degree(u);
            for &v in g.neighbors(u) {
                if labels[v] == usize::MAX {
                    labels[v] = id;
                    members.push(v);
                    stack.push(v);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
        edge_counts.push(degree_sum / 2);
    }
    ComponentDecomposition { labels, components, edge_counts }
}

pub fn is_acyclic(g: &SupportGraph) -> bool {
    let dec = decompose(g);
    (0..dec.len()).all(|c| dec.is_acyclic(c))
}

/// Length of the shortest cycle, `None` for a forest.
///
/// Breadth-first search from every vertex of every cyclic component.
pub fn girth(g: &SupportGraph) -> Option<usize> {
    let dec = decompose(g);
    let n = g.dim();
    let mut best = usize::MAX;
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for c in 0..dec.len() {
        if dec.is_acyclic(c) {
            continue;
        }
        for &root in &dec.components()[c] {
            let mut touched = vec![root];
            dist[root] = 0;
            queue.push_back(root);
            'bfs: while let Some(u) = queue.pop_front() {
                if 2 * dist[u] + 1 >= best {
                    break;
                }
                for &v in g.neighbors(u) {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        parent[v] = u;
                        touched.push(v);
                        queue.push_back(v);
                    } else if parent[u] != v {
                        best = best.min(dist[u] + dist[v] + 1);
                        if best == 3 {
                            break 'bfs;
                        }
                    }
                }
            }
            queue.clear();
            for v in touched {
                dist[v] = usize::MAX;
                parent[v] = usize::MAX;
            }
            if best == 3 {
                return Some(3);
            }
        }
    }
    (best != usize::MAX).then_some(best)
}

/// Maximum number of simple paths joining a pair of vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathCount {
    Exact(u64),
    /// Some pair is joined by more paths than the cap.
    Overflow,
}

pub const DEFAULT_PATH_CAP: u64 = 1_000_000;

/// Largest number of simple paths between two distinct vertices, by
/// exhaustive depth-first enumeration; stops once any pair exceeds `cap`.
pub fn max_simple_paths(g: &SupportGraph, cap: u64) -> PathCount {
    let dec = decompose(g);
    let mut best = 0u64;
    let n = g.dim();
    let mut counts = vec![0u64; n];
    let mut on_path = vec![false; n];
    for c in 0..dec.len() {
        let members = &dec.components()[c];
        if members.len() < 2 {
            continue;
        }
        if dec.is_acyclic(c) {
            best = best.max(1);
            continue;
        }
        for &s in members {
            for &v in members {
                counts[v] = 0;
            }
            // Stack of (vertex, index of next neighbor to try).
            let mut stack: Vec<(usize, usize)> = vec![(s, 0)];
            on_path[s] = true;
            while let Some(top) = stack.last_mut() {
                let (u, next) = *top;
                if next == g.degree(u) {
                    on_path[u] = false;
                    stack.pop();
                    continue;
                }
                top.1 += 1;
                let v = g.neighbors(u)[next];
                if on_path[v] {
                    continue;
                }
                counts[v] += 1;
                if counts[v] > cap {
                    return PathCount::Overflow;
                }
                on_path[v] = true;
                stack.push((v, 0));
            }
            for &v in members {
                if v != s {
                    best = best.max(counts[v]);
                }
            }
        }
    }
    PathCount::Exact(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CycleStats {
    pub girth: Option<usize>,
    pub max_degree: usize,
    pub max_paths: PathCount,
}

pub fn cycle_stats(g: &SupportGraph, cap: u64) -> CycleStats {
    CycleStats { girth: girth(g), max_degree: g.max_degree(), max_paths: max_simple_paths(g, cap) }
}
