//! Simple connected undirected graphs with positive integer identifiers.
//!
//! Port `p` of a node is its `p`-th smallest neighbor id; adjacency lists
//! are kept sorted so port order is canonical.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{FsdError, Result};

/// Positive integer node identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn value(self) -> u32 {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An undirected edge stored as (min id, max id).
pub type Edge = (NodeId, NodeId);

pub fn edge(u: NodeId, v: NodeId) -> Edge {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    nodes: Vec<NodeId>,
    adjacency: BTreeMap<NodeId, Vec<NodeId>>,
    pub name: Option<String>,
}

impl Graph {
    /// Builds a graph, checking that it is simple, undirected, and connected,
    /// with unique positive ids.
    pub fn new(nodes: Vec<NodeId>, edges: &[Edge]) -> Result<Self> {
        let mut sorted = nodes;
        sorted.sort_unstable();
        if sorted.is_empty() {
            return Err(FsdError::InvalidGraph("empty node set".into()));
        }
        if sorted.iter().any(|n| n.0 == 0) {
            return Err(FsdError::InvalidGraph("node ids must be positive".into()));
        }
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(FsdError::InvalidGraph("duplicate node id".into()));
        }
        let node_set: BTreeSet<NodeId> = sorted.iter().copied().collect();
        let mut adjacency: BTreeMap<NodeId, Vec<NodeId>> =
            sorted.iter().map(|&n| (n, Vec::new())).collect();
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            if u == v {
                return Err(FsdError::InvalidGraph(format!("self-loop at {u}")));
            }
            if !node_set.contains(&u) || !node_set.contains(&v) {
                return Err(FsdError::InvalidGraph(format!("edge {{{u},{v}}} has unknown endpoint")));
            }
            if !seen.insert(edge(u, v)) {
                return Err(FsdError::InvalidGraph(format!("multi-edge {{{u},{v}}}")));
            }
            adjacency.get_mut(&u).unwrap().push(v);
            adjacency.get_mut(&v).unwrap().push(u);
        }
        for list in adjacency.values_mut() {
            list.sort_unstable();
        }
        let g = Graph { nodes: sorted, adjacency, name: None };
        if !g.is_connected() {
            return Err(FsdError::InvalidGraph("graph is not connected".into()));
        }
        Ok(g)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes in ascending id order; configuration index i corresponds to
    /// `nodes()[i]`.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.adjacency.contains_key(&v)
    }

    /// Neighbors of `v` in port order (ascending id).
    pub fn ports(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[&v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[&v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.nodes.iter().map(|&v| self.degree(v)).max().unwrap_or(0)
    }

    /// Position of `v` in the ascending node order.
    pub fn index_of(&self, v: NodeId) -> usize {
        self.nodes.binary_search(&v).expect("node not in graph")
    }

    /// All edges, each as (min, max), in lexicographic order.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for (&u, nbrs) in &self.adjacency {
            for &v in nbrs {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|&v| self.degree(v)).sum::<usize>() / 2
    }

    /// BFS distances from `v`; unreachable nodes absent (cannot happen on a
    /// valid connected graph, but the helper is reused on claimed subgraphs).
    pub fn distances_from(&self, v: NodeId) -> BTreeMap<NodeId, usize> {
        bfs_distances(&self.adjacency, v)
    }

    /// B_v(p): edges with at least one endpoint at distance <= p from v,
    /// sorted lexicographically.
    pub fn ball_edges(&self, v: NodeId, p: usize) -> Vec<Edge> {
        let dist = self.distances_from(v);
        let mut out = BTreeSet::new();
        for (&u, &d) in &dist {
            if d <= p {
                for &w in self.ports(u) {
                    out.insert(edge(u, w));
                }
            }
        }
        out.into_iter().collect()
    }

    /// b_v(p), the cardinality of B_v(p).
    pub fn ball_size(&self, v: NodeId, p: usize) -> usize {
        self.ball_edges(v, p).len()
    }

    /// b_max(p) = max over v of b_v(p).
    pub fn ball_size_max(&self, p: usize) -> usize {
        self.nodes.iter().map(|&v| self.ball_size(v, p)).max().unwrap_or(0)
    }

    pub fn diameter(&self) -> usize {
        self.nodes
            .iter()
            .map(|&v| self.distances_from(v).values().copied().max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    fn is_connected(&self) -> bool {
        let start = self.nodes[0];
        self.distances_from(start).len() == self.nodes.len()
    }
}

/// BFS over an arbitrary adjacency map (also used for claimed subgraphs
/// reconstructed from certificates).
pub fn bfs_distances(
    adjacency: &BTreeMap<NodeId, Vec<NodeId>>,
    start: NodeId,
) -> BTreeMap<NodeId, usize> {
    let mut dist = BTreeMap::new();
    if !adjacency.contains_key(&start) {
        return dist;
    }
    dist.insert(start, 0);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        for &w in &adjacency[&u] {
            if !dist.contains_key(&w) {
                dist.insert(w, du + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(v: u32) -> NodeId {
        NodeId(v)
    }

    fn path3() -> Graph {
        Graph::new(vec![id(1), id(2), id(3)], &[(id(1), id(2)), (id(2), id(3))]).unwrap()
    }

    #[test]
    fn rejects_self_loop_multi_edge_disconnected() {
        assert!(Graph::new(vec![id(1)], &[(id(1), id(1))]).is_err());
        assert!(Graph::new(vec![id(1), id(2)], &[(id(1), id(2)), (id(2), id(1))]).is_err());
        assert!(Graph::new(vec![id(1), id(2), id(3)], &[(id(1), id(2))]).is_err());
    }

    #[test]
    fn ports_are_ascending() {
        let g = Graph::new(
            vec![id(5), id(1), id(3)],
            &[(id(5), id(1)), (id(3), id(5))],
        )
        .unwrap();
        assert_eq!(g.ports(id(5)), &[id(1), id(3)]);
    }

    #[test]
    fn ball_edges_path() {
        // path a-b-c with a=1, b=2, c=3
        let g = path3();
        assert_eq!(g.ball_edges(id(1), 0), vec![(id(1), id(2))]);
        assert_eq!(g.ball_edges(id(1), 1), vec![(id(1), id(2)), (id(2), id(3))]);
        // p >= diameter: all edges
        assert_eq!(g.ball_edges(id(1), 2), g.edges());
        assert_eq!(g.ball_edges(id(3), 5), g.edges());
    }

    #[test]
    fn ball_monotone() {
        let g = Graph::new(
            vec![id(1), id(2), id(3), id(4), id(5)],
            &[
                (id(1), id(2)),
                (id(2), id(3)),
                (id(3), id(4)),
                (id(4), id(5)),
                (id(5), id(1)),
            ],
        )
        .unwrap();
        for &v in g.nodes() {
            for p in 0..4 {
                let small: BTreeSet<_> = g.ball_edges(v, p).into_iter().collect();
                let big: BTreeSet<_> = g.ball_edges(v, p + 1).into_iter().collect();
                assert!(small.is_subset(&big));
            }
        }
    }
}
