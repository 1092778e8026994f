use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Largest supported node count (parent sets are bitmasks).
pub const MAX_NODES: usize = 32;

/// A set of parent nodes stored as a bitmask; iteration is ascending.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", try_from = "Vec<usize>")]
pub struct ParentSet(u32);

impl ParentSet {
    pub const EMPTY: ParentSet = ParentSet(0);

    pub fn from_bits(bits: u32) -> Self {
        ParentSet(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn from_nodes(nodes: &[usize]) -> Self {
        ParentSet(nodes.iter().fold(0, |acc, &m| acc | (1 << m)))
    }

    pub fn contains(self, node: usize) -> bool {
        node < MAX_NODES && self.0 & (1 << node) != 0
    }

    pub fn with(self, node: usize) -> Self {
        ParentSet(self.0 | (1 << node))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..MAX_NODES).filter(move |&m| bits & (1 << m) != 0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl From<ParentSet> for Vec<usize> {
    fn from(p: ParentSet) -> Self {
        p.to_vec()
    }
}

impl TryFrom<Vec<usize>> for ParentSet {
    type Error = String;

    fn try_from(v: Vec<usize>) -> std::result::Result<Self, String> {
        if let Some(&m) = v.iter().find(|&&m| m >= MAX_NODES) {
            return Err(format!("parent index {m} exceeds {MAX_NODES}"));
        }
        Ok(ParentSet::from_nodes(&v))
    }
}

/// Directed graph over `0..n`, cycles allowed, self-loops not.
///
/// Serialized as the list of parent sets, one per node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ParentSet>", into = "Vec<ParentSet>")]
pub struct Graph {
    parents: Vec<ParentSet>,
}

impl TryFrom<Vec<ParentSet>> for Graph {
    type Error = Error;

    fn try_from(v: Vec<ParentSet>) -> Result<Self> {
        Graph::from_parent_sets(v)
    }
}

impl From<Graph> for Vec<ParentSet> {
    fn from(g: Graph) -> Self {
        g.parents
    }
}

impl Graph {
    pub fn empty(num_nodes: usize) -> Self {
        Graph {
            parents: vec![ParentSet::EMPTY; num_nodes],
        }
    }

    pub fn from_parent_sets(parents: Vec<ParentSet>) -> Result<Self> {
        let n = parents.len();
        if n > MAX_NODES {
            return Err(Error::Dimension(format!("{n} nodes exceeds limit {MAX_NODES}")));
        }
        for (node, ps) in parents.iter().enumerate() {
            if ps.contains(node) {
                return Err(Error::InvalidArgument(format!("self-loop on node {node}")));
            }
            if ps.iter().any(|m| m >= n) {
                return Err(Error::Dimension(format!(
                    "parent set of node {node} references a node outside 0..{n}"
                )));
            }
        }
        Ok(Graph { parents })
    }

    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut parents = vec![ParentSet::EMPTY; num_nodes];
        for &(from, to) in edges {
            if from >= num_nodes || to >= num_nodes {
                return Err(Error::Dimension(format!(
                    "edge {from}->{to} outside 0..{num_nodes}"
                )));
            }
            parents[to] = parents[to].with(from);
        }
        Graph::from_parent_sets(parents)
    }

    pub fn num_nodes(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self, node: usize) -> ParentSet {
        self.parents[node]
    }

    pub fn parent_sets(&self) -> &[ParentSet] {
        &self.parents
    }

    /// Returns a copy with node `node`'s parent set replaced.
    pub fn with_parents(&self, node: usize, parents: ParentSet) -> Result<Self> {
        let mut ps = self.parents.clone();
        ps[node] = parents;
        Graph::from_parent_sets(ps)
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.parents[to].contains(from)
    }

    /// Edges `(from, to)` ordered by target, then source.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(to, ps)| ps.iter().map(move |from| (from, to)))
            .collect()
    }

    /// Row-major adjacency: `adj[from][to]`.
    pub fn adjacency(&self) -> Vec<Vec<bool>> {
        let n = self.num_nodes();
        (0..n)
            .map(|from| (0..n).map(|to| self.has_edge(from, to)).collect())
            .collect()
    }
}

/// All parent sets of `node` drawn from the other nodes with at most
/// `max_parents` members, in increasing bitmask order.
pub fn candidate_parent_sets(num_nodes: usize, node: usize, max_parents: usize) -> Vec<ParentSet> {
    (0u32..(1u32 << num_nodes))
        .map(ParentSet::from_bits)
        .filter(|ps| !ps.contains(node) && ps.len() <= max_parents)
        .collect()
}
