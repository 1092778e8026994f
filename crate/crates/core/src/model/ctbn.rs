use super::graph::{Graph, ParentSet};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Mixed-radix enumeration of joint states, node 0 fastest.
///
/// A joint state `s = (x_0, …, x_{N-1})` has index `Σ x_n · stride_n`
/// with `stride_0 = 1` and `stride_n = Π_{m<n} |X_m|`. Parent
/// configurations use the same rule restricted to the (ascending) parent
/// list, so the lowest-indexed parent varies fastest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointSpace {
    cards: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl JointSpace {
    pub fn new(cards: &[usize]) -> Self {
        let mut strides = Vec::with_capacity(cards.len());
        let mut size = 1usize;
        for &c in cards {
            strides.push(size);
            size *= c;
        }
        JointSpace {
            cards: cards.to_vec(),
            strides,
            size,
        }
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn num_nodes(&self) -> usize {
        self.cards.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn stride(&self, node: usize) -> usize {
        self.strides[node]
    }

    pub fn encode(&self, state: &[usize]) -> usize {
        state.iter().zip(&self.strides).map(|(x, s)| x * s).sum()
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        self.cards
            .iter()
            .zip(&self.strides)
            .map(|(&c, &s)| (index / s) % c)
            .collect()
    }

    #[inline]
    pub fn coord(&self, index: usize, node: usize) -> usize {
        (index / self.strides[node]) % self.cards[node]
    }

    /// Index of `index` with node `node` set to `value`.
    #[inline]
    pub fn with_coord(&self, index: usize, node: usize, value: usize) -> usize {
        let cur = self.coord(index, node);
        index + value * self.strides[node] - cur * self.strides[node]
    }

    /// Parent-configuration index of `parents` in joint state `index`.
    pub fn config_of(&self, index: usize, parents: ParentSet) -> usize {
        let mut u = 0;
        let mut radix = 1;
        for m in parents.iter() {
            u += self.coord(index, m) * radix;
            radix *= self.cards[m];
        }
        u
    }

    pub fn check_state(&self, state: &[usize]) -> Result<()> {
        if state.len() != self.cards.len() {
            return Err(Error::Dimension(format!(
                "state has {} entries, model has {} nodes",
                state.len(),
                self.cards.len()
            )));
        }
        for (n, (&x, &c)) in state.iter().zip(&self.cards).enumerate() {
            if x >= c {
                return Err(Error::Dimension(format!(
                    "state {x} of node {n} outside 0..{c}"
                )));
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<Vec<f64>>>> for NodeRates {
    type Error = Error;

    fn try_from(v: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        NodeRates::from_nested(&v)
    }
}

impl From<NodeRates> for Vec<Vec<Vec<f64>>> {
    fn from(r: NodeRates) -> Self {
        r.to_nested()
    }
}

/// Number of parent configurations of a parent set.
pub fn num_configs(cards: &[usize], parents: ParentSet) -> usize {
    parents.iter().map(|m| cards[m]).product()
}

/// Parent-configuration index of `parents` read from a joint state vector.
pub fn config_index(state: &[usize], cards: &[usize], parents: ParentSet) -> usize {
    let mut u = 0;
    let mut radix = 1;
    for m in parents.iter() {
        u += state[m] * radix;
        radix *= cards[m];
    }
    u
}

/// Shape of a node's condition-indexed tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeShape {
    pub card: usize,
    pub num_configs: usize,
}

impl NodeShape {
    #[inline]
    pub fn trans_index(&self, u: usize, x: usize, x2: usize) -> usize {
        (u * self.card + x) * self.card + x2
    }

    #[inline]
    pub fn dwell_index(&self, u: usize, x: usize) -> usize {
        u * self.card + x
    }

    pub fn trans_len(&self) -> usize {
        self.num_configs * self.card * self.card
    }

    pub fn dwell_len(&self) -> usize {
        self.num_configs * self.card
    }

    /// Off-diagonal cells `(u, x, x')` in storage order.
    pub fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let card = self.card;
        (0..self.num_configs).flat_map(move |u| {
            (0..card).flat_map(move |x| (0..card).filter(move |&x2| x2 != x).map(move |x2| (u, x, x2)))
        })
    }
}

/// Conditional intensity tensor Λ(x, x', u) of one node.
///
/// Only off-diagonal entries are stored; the diagonal is always derived as
/// minus the exit rate, so rows of the conditional intensity matrix sum to
/// zero by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<f64>>>", into = "Vec<Vec<Vec<f64>>>")]
pub struct NodeRates {
    shape: NodeShape,
    off: Vec<f64>,
}

impl NodeRates {
    pub fn zeros(card: usize, num_configs: usize) -> Self {
        let shape = NodeShape { card, num_configs };
        NodeRates {
            shape,
            off: vec![0.0; shape.trans_len()],
        }
    }

    /// Builds from `rates[u][x][x']`; diagonal entries are ignored.
    pub fn from_nested(rates: &[Vec<Vec<f64>>]) -> Result<Self> {
        let num_configs = rates.len();
        let card = rates.first().map_or(0, |m| m.len());
        if num_configs == 0 || card == 0 {
            return Err(Error::Dimension("empty rate tensor".into()));
        }
        let mut out = NodeRates::zeros(card, num_configs);
        for (u, mat) in rates.iter().enumerate() {
            if mat.len() != card || mat.iter().any(|row| row.len() != card) {
                return Err(Error::Dimension(format!(
                    "rate matrix for configuration {u} is not {card}x{card}"
                )));
            }
            for (x, row) in mat.iter().enumerate() {
                for (x2, &v) in row.iter().enumerate() {
                    if x2 != x {
                        out.set(u, x, x2, v)?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Nested `rates[u][x][x']` with the derived diagonal filled in.
    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.shape.num_configs)
            .map(|u| {
                (0..self.shape.card)
                    .map(|x| (0..self.shape.card).map(|x2| self.rate(u, x, x2)).collect())
                    .collect()
            })
            .collect()
    }

    pub fn shape(&self) -> NodeShape {
        self.shape
    }

    pub fn card(&self) -> usize {
        self.shape.card
    }

    pub fn num_configs(&self) -> usize {
        self.shape.num_configs
    }

    /// Λ(x, x', u); for `x == x'` the derived diagonal −Σ_{x''≠x} Λ(x, x'', u).
    #[inline]
    pub fn rate(&self, u: usize, x: usize, x2: usize) -> f64 {
        if x == x2 {
            -self.exit_rate(u, x)
        } else {
            self.off[self.shape.trans_index(u, x, x2)]
        }
    }

    #[inline]
    pub fn exit_rate(&self, u: usize, x: usize) -> f64 {
        let base = self.shape.trans_index(u, x, 0);
        self.off[base..base + self.shape.card].iter().sum()
    }

    pub fn set(&mut self, u: usize, x: usize, x2: usize, value: f64) -> Result<()> {
        if x == x2 {
            return Err(Error::InvalidArgument("diagonal rates are derived, not set".into()));
        }
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rate {value} must be finite and non-negative"
            )));
        }
        let i = self.shape.trans_index(u, x, x2);
        self.off[i] = value;
        Ok(())
    }

    /// Raw off-diagonal storage in `(u, x, x')` order (diagonal slots are 0).
    pub fn raw(&self) -> &[f64] {
        &self.off
    }

    pub fn max_rate(&self) -> f64 {
        self.off.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        NodeRates {
            shape: self.shape,
            off: self.off.iter().map(|v| v * factor).collect(),
        }
    }
}

/// A (conditional) continuous-time Bayesian network in its original,
/// un-intervened condition.
#[derive(Clone, Debug, PartialEq)]
pub struct Ctbn {
    cards: Vec<usize>,
    graph: Graph,
    nodes: Vec<NodeRates>,
}

impl Ctbn {
    pub fn new(cards: Vec<usize>, graph: Graph, nodes: Vec<NodeRates>) -> Result<Self> {
        let n = cards.len();
        if graph.num_nodes() != n || nodes.len() != n {
            return Err(Error::Dimension(format!(
                "{} cardinalities, {} graph nodes, {} rate tensors",
                n,
                graph.num_nodes(),
                nodes.len()
            )));
        }
        if let Some(node) = cards.iter().position(|&c| c < 2) {
            return Err(Error::Dimension(format!("node {node} has fewer than 2 states")));
        }
        for (node, rates) in nodes.iter().enumerate() {
            check_node_shape(&cards, &graph, node, rates)?;
            if let Some(&v) = rates.raw().iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::InvalidRate { node, value: v });
            }
        }
        Ok(Ctbn { cards, graph, nodes })
    }

    /// A model with all rates zero under `graph`.
    pub fn zeros(cards: Vec<usize>, graph: Graph) -> Result<Self> {
        let nodes = (0..cards.len())
            .map(|n| NodeRates::zeros(cards[n], num_configs(&cards, graph.parents(n))))
            .collect();
        Ctbn::new(cards, graph, nodes)
    }

    pub fn num_nodes(&self) -> usize {
        self.cards.len()
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn node(&self, n: usize) -> &NodeRates {
        &self.nodes[n]
    }

    pub fn nodes(&self) -> &[NodeRates] {
        &self.nodes
    }

    pub fn joint_space(&self) -> JointSpace {
        JointSpace::new(&self.cards)
    }

    pub(crate) fn replace_node(&mut self, n: usize, rates: NodeRates) -> Result<()> {
        check_node_shape(&self.cards, &self.graph, n, &rates)?;
        self.nodes[n] = rates;
        Ok(())
    }

    /// Off-diagonal cells of all nodes, `(node, u, x, x')`.
    pub fn cells(&self) -> Vec<(usize, usize, usize, usize)> {
        self.nodes
            .iter()
            .enumerate()
            .flat_map(|(n, r)| r.shape().off_diagonal().map(move |(u, x, x2)| (n, u, x, x2)).collect::<Vec<_>>())
            .collect()
    }
}

pub(crate) fn check_node_shape(cards: &[usize], graph: &Graph, node: usize, rates: &NodeRates) -> Result<()> {
    let want_configs = num_configs(cards, graph.parents(node));
    if rates.card() != cards[node] || rates.num_configs() != want_configs {
        return Err(Error::Dimension(format!(
            "node {node}: rate tensor is {}x{}x{} but graph implies {}x{}x{}",
            rates.num_configs(),
            rates.card(),
            rates.card(),
            want_configs,
            cards[node],
            cards[node]
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joint_space_is_node0_fastest() {
        let js = JointSpace::new(&[2, 3, 2]);
        assert_eq!(js.size(), 12);
        assert_eq!(js.encode(&[1, 0, 0]), 1);
        assert_eq!(js.encode(&[0, 1, 0]), 2);
        assert_eq!(js.encode(&[0, 0, 1]), 6);
        for s in 0..12 {
            assert_eq!(js.encode(&js.decode(s)), s);
        }
        assert_eq!(js.with_coord(js.encode(&[1, 2, 0]), 1, 0), js.encode(&[1, 0, 0]));
    }

    #[test]
    fn parent_config_lowest_parent_fastest() {
        let cards = [2, 3, 2];
        let ps = ParentSet::from_nodes(&[0, 1]);
        assert_eq!(num_configs(&cards, ps), 6);
        assert_eq!(config_index(&[1, 0, 0], &cards, ps), 1);
        assert_eq!(config_index(&[0, 2, 0], &cards, ps), 4);
        let js = JointSpace::new(&cards);
        assert_eq!(js.config_of(js.encode(&[1, 2, 1]), ps), 5);
    }

    #[test]
    fn diagonal_is_derived() {
        let r = NodeRates::from_nested(&[vec![vec![9.0, 1.0, 2.0], vec![0.5, 0.0, 0.0], vec![0.0, 0.0, 0.0]]]).unwrap();
        assert_eq!(r.rate(0, 0, 0), -3.0);
        assert_eq!(r.rate(0, 1, 1), -0.5);
        assert!(NodeRates::zeros(2, 1).clone().set(0, 0, 0, 1.0).is_err());
    }

    #[test]
    fn rejects_shape_mismatch() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let nodes = vec![NodeRates::zeros(2, 1), NodeRates::zeros(2, 1)];
        assert!(matches!(Ctbn::new(vec![2, 2], g, nodes), Err(Error::Dimension(_))));
    }
}
