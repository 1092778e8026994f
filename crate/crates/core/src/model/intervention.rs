use super::ctbn::{check_node_shape, Ctbn, NodeRates};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;

/// Condition of a single node.
///
/// JSON: `"none"`, `{"clamp": x}` or `{"override": rates[u][x][x']}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeCondition {
    /// Original model (condition 0).
    None,
    /// Perfect intervention: all outgoing rates zero, node held at this state.
    Clamp(usize),
    /// Imperfect intervention: the node's rate tensor is replaced.
    Override(NodeRates),
}

/// Key under which a node's statistics are pooled.
///
/// Imperfect interventions are keyed by a SHA-256 digest of the override
/// tensor (shape and raw little-endian rates), truncated to 64 bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConditionKey {
    Observed,
    Clamp(usize),
    Override(u64),
}

impl NodeCondition {
    pub fn key(&self) -> ConditionKey {
        match self {
            NodeCondition::None => ConditionKey::Observed,
            NodeCondition::Clamp(x) => ConditionKey::Clamp(*x),
            NodeCondition::Override(r) => ConditionKey::Override(override_digest(r)),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, NodeCondition::None)
    }
}

pub fn override_digest(rates: &NodeRates) -> u64 {
    let mut h = Sha256::new();
    h.update((rates.card() as u64).to_le_bytes());
    h.update((rates.num_configs() as u64).to_le_bytes());
    for v in rates.raw() {
        h.update(v.to_le_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// Per-node conditions of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Intervention {
    conditions: Vec<NodeCondition>,
}

impl Intervention {
    /// The no-op intervention on `num_nodes` nodes.
    pub fn none(num_nodes: usize) -> Self {
        Intervention {
            conditions: vec![NodeCondition::None; num_nodes],
        }
    }

    pub fn from_conditions(conditions: Vec<NodeCondition>) -> Self {
        Intervention { conditions }
    }

    /// Perfect interventions `do(X_m = x_m)` for each `(m, x_m)`.
    pub fn clamps(num_nodes: usize, clamps: &[(usize, usize)]) -> Self {
        let mut iv = Intervention::none(num_nodes);
        for &(node, state) in clamps {
            iv.conditions[node] = NodeCondition::Clamp(state);
        }
        iv
    }

    pub fn num_nodes(&self) -> usize {
        self.conditions.len()
    }

    pub fn condition(&self, node: usize) -> &NodeCondition {
        &self.conditions[node]
    }

    pub fn conditions(&self) -> &[NodeCondition] {
        &self.conditions
    }

    pub fn is_none(&self) -> bool {
        self.conditions.iter().all(NodeCondition::is_none)
    }

    /// Membership of the un-intervened set: `true` for nodes in condition 0.
    pub fn unintervened(&self) -> Vec<bool> {
        self.conditions.iter().map(NodeCondition::is_none).collect()
    }

    pub fn clamped_states(&self) -> Vec<(usize, usize)> {
        self.conditions
            .iter()
            .enumerate()
            .filter_map(|(n, c)| match c {
                NodeCondition::Clamp(x) => Some((n, *x)),
                _ => None,
            })
            .collect()
    }

    /// Overrides the clamped coordinates of `state` with the clamp states.
    pub fn force_initial(&self, state: &mut [usize]) {
        for (n, x) in self.clamped_states() {
            state[n] = x;
        }
    }

    /// Errors if `state` disagrees with any clamp.
    pub fn check_initial(&self, state: &[usize]) -> Result<()> {
        for (node, clamp) in self.clamped_states() {
            if state[node] != clamp {
                return Err(Error::ClampConflict {
                    node,
                    clamp,
                    initial: state[node],
                });
            }
        }
        Ok(())
    }

    pub fn validate(&self, model: &Ctbn) -> Result<()> {
        if self.conditions.len() != model.num_nodes() {
            return Err(Error::Dimension(format!(
                "intervention covers {} nodes, model has {}",
                self.conditions.len(),
                model.num_nodes()
            )));
        }
        for (n, c) in self.conditions.iter().enumerate() {
            match c {
                NodeCondition::None => {}
                NodeCondition::Clamp(x) if *x < model.cards()[n] => {}
                NodeCondition::Clamp(x) => {
                    return Err(Error::Dimension(format!(
                        "clamp state {x} of node {n} outside 0..{}",
                        model.cards()[n]
                    )))
                }
                NodeCondition::Override(r) => check_node_shape(model.cards(), model.graph(), n, r)?,
            }
        }
        Ok(())
    }

    /// Short label: `none` or `node=state` pairs joined by `;` (overrides as `node=~`).
    pub fn label(&self) -> String {
        if self.is_none() {
            return "none".to_string();
        }
        self.conditions
            .iter()
            .enumerate()
            .filter_map(|(n, c)| match c {
                NodeCondition::None => None,
                NodeCondition::Clamp(x) => Some(format!("{n}={x}")),
                NodeCondition::Override(_) => Some(format!("{n}=~")),
            })
            .collect::<Vec<_>>()
            .join(";")
    }
}

impl fmt::Display for Intervention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Returns the model under `intervention`: clamped nodes get all-zero
/// rates, overridden nodes get their replacement tensor, all other nodes
/// are unchanged.
pub fn apply_intervention(model: &Ctbn, intervention: &Intervention) -> Result<Ctbn> {
    intervention.validate(model)?;
    let mut out = model.clone();
    for (n, c) in intervention.conditions().iter().enumerate() {
        match c {
            NodeCondition::None => {}
            NodeCondition::Clamp(_) => {
                let r = model.node(n);
                out.replace_node(n, NodeRates::zeros(r.card(), r.num_configs()))?;
            }
            NodeCondition::Override(r) => out.replace_node(n, r.clone())?,
        }
    }
    Ok(out)
}

/// Every single-node and two-node clamp, preceded by the no-op.
///
/// Order: no-op; singles by node then state; pairs by (m < j) then
/// (x_m, x_j) with x_j fastest.
pub fn clamp_candidates(cards: &[usize], max_targets: usize) -> Vec<Intervention> {
    let n = cards.len();
    let mut out = vec![Intervention::none(n)];
    if max_targets >= 1 {
        for m in 0..n {
            for x in 0..cards[m] {
                out.push(Intervention::clamps(n, &[(m, x)]));
            }
        }
    }
    if max_targets >= 2 {
        for m in 0..n {
            for j in (m + 1)..n {
                for xm in 0..cards[m] {
                    for xj in 0..cards[j] {
                        out.push(Intervention::clamps(n, &[(m, xm), (j, xj)]));
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::graph::Graph;

    fn two_node() -> Ctbn {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let n0 = NodeRates::from_nested(&[vec![vec![0.0, 1.0], vec![2.0, 0.0]]]).unwrap();
        let n1 = NodeRates::from_nested(&[
            vec![vec![0.0, 0.5], vec![1.5, 0.0]],
            vec![vec![0.0, 3.0], vec![0.25, 0.0]],
        ])
        .unwrap();
        Ctbn::new(vec![2, 2], g, vec![n0, n1]).unwrap()
    }

    #[test]
    fn clamp_zeroes_node_rates() {
        let m = two_node();
        let out = apply_intervention(&m, &Intervention::clamps(2, &[(1, 0)])).unwrap();
        assert!(out.node(1).raw().iter().all(|&v| v == 0.0));
        assert_eq!(out.node(0), m.node(0));
    }

    #[test]
    fn no_op_is_identity_and_clamp_is_idempotent() {
        let m = two_node();
        assert_eq!(apply_intervention(&m, &Intervention::none(2)).unwrap(), m);
        let iv = Intervention::clamps(2, &[(0, 1)]);
        let once = apply_intervention(&m, &iv).unwrap();
        assert_eq!(apply_intervention(&once, &iv).unwrap(), once);
    }

    #[test]
    fn override_is_local() {
        let m = two_node();
        let doubled = m.node(1).scaled(2.0);
        let iv = Intervention::from_conditions(vec![NodeCondition::None, NodeCondition::Override(doubled.clone())]);
        let out = apply_intervention(&m, &iv).unwrap();
        assert_eq!(out.node(0), m.node(0));
        assert_eq!(out.node(1), &doubled);
        let bad = Intervention::from_conditions(vec![NodeCondition::Override(doubled), NodeCondition::None]);
        assert!(apply_intervention(&m, &bad).is_err());
    }

    #[test]
    fn aleph_and_labels() {
        let iv = Intervention::clamps(4, &[(1, 0), (3, 1)]);
        assert_eq!(iv.unintervened(), vec![true, false, true, false]);
        assert_eq!(iv.label(), "1=0;3=1");
        assert_eq!(Intervention::none(3).label(), "none");
    }

    #[test]
    fn candidate_count_for_four_binary_nodes() {
        let c = clamp_candidates(&[2, 2, 2, 2], 2);
        assert_eq!(c.len(), 1 + 8 + 6 * 4);
        assert!(c[0].is_none());
    }

    #[test]
    fn json_round_trip() {
        let r = NodeRates::from_nested(&[vec![vec![0.0, 1.0], vec![2.0, 0.0]]]).unwrap();
        let iv = Intervention::from_conditions(vec![NodeCondition::Clamp(1), NodeCondition::None, NodeCondition::Override(r)]);
        let text = serde_json::to_string(&iv).unwrap();
        assert!(text.starts_with(r#"[{"clamp":1},"none",{"override":"#));
        assert_eq!(serde_json::from_str::<Intervention>(&text).unwrap(), iv);
    }

    #[test]
    fn override_keys_are_content_addressed() {
        let a = NodeRates::from_nested(&[vec![vec![0.0, 1.0], vec![2.0, 0.0]]]).unwrap();
        let b = a.scaled(1.0);
        let c = a.scaled(2.0);
        assert_eq!(override_digest(&a), override_digest(&b));
        assert_ne!(override_digest(&a), override_digest(&c));
    }
}
