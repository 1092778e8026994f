use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::model::{config_index, num_configs, ConditionKey, Graph, NodeCondition, NodeRates, NodeShape, ParentSet};
use crate::stats::NodeStats;
use std::collections::BTreeMap;

/// Statistics of one node, filed by the condition it was under.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ConditionedStats {
    pub by_condition: BTreeMap<ConditionKey, NodeStats>,
    /// Rate tensors of imperfect interventions, by their key digest.
    pub overrides: BTreeMap<u64, NodeRates>,
}

/// Condition-indexed transition counts and dwell times under a fixed graph.
#[derive(Clone, Debug, PartialEq)]
pub struct SufficientStats {
    cards: Vec<usize>,
    graph: Graph,
    nodes: Vec<ConditionedStats>,
}

impl SufficientStats {
    pub fn empty(cards: &[usize], graph: &Graph) -> Self {
        SufficientStats {
            cards: cards.to_vec(),
            graph: graph.clone(),
            nodes: vec![ConditionedStats::default(); cards.len()],
        }
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn node(&self, n: usize) -> &ConditionedStats {
        &self.nodes[n]
    }

    pub fn shape(&self, n: usize) -> NodeShape {
        NodeShape {
            card: self.cards[n],
            num_configs: num_configs(&self.cards, self.graph.parents(n)),
        }
    }

    pub fn condition(&self, n: usize, key: ConditionKey) -> Option<&NodeStats> {
        self.nodes[n].by_condition.get(&key)
    }

    /// Statistics of node `n` gathered while it was not intervened on.
    pub fn observed(&self, n: usize) -> NodeStats {
        self.condition(n, ConditionKey::Observed)
            .cloned()
            .unwrap_or_else(|| NodeStats::zeros(self.shape(n)))
    }

    /// Adds `stats` for node `n` under `condition`.
    pub fn add(&mut self, n: usize, condition: &NodeCondition, stats: &NodeStats) -> Result<()> {
        let key = condition.key();
        if let NodeCondition::Override(r) = condition {
            if let ConditionKey::Override(h) = key {
                self.nodes[n].overrides.entry(h).or_insert_with(|| r.clone());
            }
        }
        let shape = self.shape(n);
        self.nodes[n]
            .by_condition
            .entry(key)
            .or_insert_with(|| NodeStats::zeros(shape))
            .accumulate(stats)
    }

    /// Cell-wise sum with `other`, condition by condition.
    pub fn accumulate(&mut self, other: &SufficientStats) -> Result<()> {
        if self.cards != other.cards || self.graph != other.graph {
            return Err(Error::Dimension("statistics were extracted under different models".into()));
        }
        for (mine, theirs) in self.nodes.iter_mut().zip(&other.nodes) {
            for (key, st) in &theirs.by_condition {
                match mine.by_condition.get_mut(key) {
                    Some(acc) => acc.accumulate(st)?,
                    None => {
                        mine.by_condition.insert(*key, st.clone());
                    }
                }
            }
            for (h, r) in &theirs.overrides {
                mine.overrides.entry(*h).or_insert_with(|| r.clone());
            }
        }
        Ok(())
    }
}

/// Walks `traj` once and accumulates the statistics of `node` under
/// `parents`, reading parent states at the left limit of every event.
pub fn extract_node_statistics(traj: &Trajectory, cards: &[usize], node: usize, parents: ParentSet) -> Result<NodeStats> {
    let shape = NodeShape {
        card: cards[node],
        num_configs: num_configs(cards, parents),
    };
    let mut out = NodeStats::zeros(shape);
    let mut state = traj.initial.clone();
    let mut last = 0.0;
    for e in &traj.events {
        if e.node >= cards.len() || e.state >= cards[e.node] {
            return Err(Error::Trajectory(format!("event sets node {} to invalid state {}", e.node, e.state)));
        }
        let u = config_index(&state, cards, parents);
        out.add_dwell(u, state[node], e.time - last);
        if e.node == node {
            out.add_trans(u, state[node], e.state, 1.0);
        }
        state[e.node] = e.state;
        last = e.time;
    }
    let u = config_index(&state, cards, parents);
    out.add_dwell(u, state[node], traj.horizon - last);
    Ok(out)
}

/// Statistics of every node of `graph`, filed under each node's
/// condition in the trajectory's intervention.
pub fn extract_statistics(traj: &Trajectory, cards: &[usize], graph: &Graph) -> Result<SufficientStats> {
    traj.validate(cards)?;
    let mut out = SufficientStats::empty(cards, graph);
    for n in 0..cards.len() {
        let st = extract_node_statistics(traj, cards, n, graph.parents(n))?;
        out.add(n, traj.intervention.condition(n), &st)?;
    }
    Ok(out)
}

/// Pools statistics of several experiments; the order does not matter.
pub fn pool(stats: &[SufficientStats]) -> Result<SufficientStats> {
    let (first, rest) = stats
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("nothing to pool".into()))?;
    let mut out = first.clone();
    for s in rest {
        out.accumulate(s)?;
    }
    Ok(out)
}
