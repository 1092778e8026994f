use super::likelihood::structure_marginal_log_likelihood;
use super::rates::{GammaPrior, NodeGamma};
use crate::error::{Error, Result};
use crate::model::{candidate_parent_sets, num_configs, Graph, NodeShape, ParentSet};
use crate::par::{self, Exec};
use crate::sim::{extract_node_statistics, Trajectory};
use crate::special::log_sum_exp;
use crate::stats::NodeStats;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Pooled condition-0 statistics of every node under every candidate
/// parent set, grown one trajectory at a time.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyTable {
    cards: Vec<usize>,
    candidates: Vec<Vec<ParentSet>>,
    stats: Vec<Vec<NodeStats>>,
}

impl FamilyTable {
    pub fn new(cards: &[usize], max_parents: usize) -> Result<Self> {
        let n = cards.len();
        if n > crate::model::MAX_NODES {
            return Err(Error::Dimension(format!("at most {} nodes supported", crate::model::MAX_NODES)));
        }
        let candidates: Vec<Vec<ParentSet>> = (0..n).map(|m| candidate_parent_sets(n, m, max_parents)).collect();
        let stats = candidates
            .iter()
            .enumerate()
            .map(|(m, sets)| {
                sets.iter()
                    .map(|&ps| {
                        NodeStats::zeros(NodeShape {
                            card: cards[m],
                            num_configs: num_configs(cards, ps),
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(FamilyTable {
            cards: cards.to_vec(),
            candidates,
            stats,
        })
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn num_nodes(&self) -> usize {
        self.cards.len()
    }

    pub fn candidates(&self, node: usize) -> &[ParentSet] {
        &self.candidates[node]
    }

    pub fn stats(&self, node: usize, index: usize) -> &NodeStats {
        &self.stats[node][index]
    }

    pub fn index_of(&self, node: usize, parents: ParentSet) -> Option<usize> {
        self.candidates[node].iter().position(|&p| p == parents)
    }

    /// Adds a trajectory; nodes intervened on in it contribute nothing.
    pub fn add(&mut self, traj: &Trajectory) -> Result<()> {
        traj.validate(&self.cards)?;
        for n in 0..self.num_nodes() {
            if !traj.intervention.condition(n).is_none() {
                continue;
            }
            for (i, &ps) in self.candidates[n].iter().enumerate() {
                let st = extract_node_statistics(traj, &self.cards, n, ps)?;
                self.stats[n][i].accumulate(&st)?;
            }
        }
        Ok(())
    }

    /// Adds expected statistics for every (node, parent set) pair.
    pub fn add_expected(&mut self, node: usize, index: usize, stats: &NodeStats) -> Result<()> {
        self.stats[node][index].accumulate(stats)
    }

    /// Gamma posterior over node `node`'s rates under parent set `index`.
    pub fn rate_posterior(&self, node: usize, index: usize, prior: GammaPrior) -> Result<NodeGamma> {
        let st = &self.stats[node][index];
        NodeGamma::prior(st.shape(), prior).updated(st)
    }
}

/// Posterior probability of one candidate parent set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParentSetScore {
    pub parents: ParentSet,
    pub log_prob: f64,
}

/// Product-form posterior over graphs, one categorical per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructurePosterior {
    pub nodes: Vec<Vec<ParentSetScore>>,
}

impl StructurePosterior {
    /// Uniform over all parent sets with at most `max_parents` members.
    pub fn uniform(num_nodes: usize, max_parents: usize) -> Self {
        let nodes = (0..num_nodes)
            .map(|n| {
                let sets = candidate_parent_sets(num_nodes, n, max_parents);
                let lp = -(sets.len() as f64).ln();
                sets.into_iter().map(|parents| ParentSetScore { parents, log_prob: lp }).collect()
            })
            .collect();
        StructurePosterior { nodes }
    }

    /// Normalises per-node unnormalised log scores.
    pub fn from_log_scores(nodes: Vec<Vec<(ParentSet, f64)>>) -> Result<Self> {
        let mut out = Vec::with_capacity(nodes.len());
        for (n, scores) in nodes.into_iter().enumerate() {
            let logs: Vec<f64> = scores.iter().map(|s| s.1).collect();
            let z = log_sum_exp(&logs);
            if !z.is_finite() {
                return Err(Error::InvalidArgument(format!("node {n}: no parent set has finite score")));
            }
            out.push(
                scores
                    .into_iter()
                    .map(|(parents, l)| ParentSetScore {
                        parents,
                        log_prob: l - z,
                    })
                    .collect(),
            );
        }
        Ok(StructurePosterior { nodes: out })
    }

    /// Point mass on `graph`; every other parent set has probability 0.
    pub fn point_mass(graph: &Graph, max_parents: usize) -> Self {
        let n = graph.num_nodes();
        let nodes = (0..n)
            .map(|m| {
                candidate_parent_sets(n, m, max_parents)
                    .into_iter()
                    .map(|parents| ParentSetScore {
                        parents,
                        log_prob: if parents == graph.parents(m) { 0.0 } else { f64::NEG_INFINITY },
                    })
                    .collect()
            })
            .collect();
        StructurePosterior { nodes }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, n: usize) -> &[ParentSetScore] {
        &self.nodes[n]
    }

    pub fn probs(&self, n: usize) -> Vec<f64> {
        self.nodes[n].iter().map(|s| s.log_prob.exp()).collect()
    }

    pub fn prob(&self, n: usize, parents: ParentSet) -> f64 {
        self.nodes[n]
            .iter()
            .find(|s| s.parents == parents)
            .map_or(0.0, |s| s.log_prob.exp())
    }

    /// Most probable parent set per node (lowest index on ties).
    pub fn map_graph(&self) -> Graph {
        let parents = self
            .nodes
            .iter()
            .map(|scores| {
                let mut best = scores[0];
                for s in &scores[1..] {
                    if s.log_prob > best.log_prob {
                        best = *s;
                    }
                }
                best.parents
            })
            .collect();
        Graph::from_parent_sets(parents).expect("candidate sets exclude self-loops")
    }

    /// Draws one parent set per node.
    pub fn sample_parents<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> ParentSet {
        let mut pick: f64 = rng.gen();
        let scores = &self.nodes[n];
        for s in scores {
            let p = s.log_prob.exp();
            if pick < p {
                return s.parents;
            }
            pick -= p;
        }
        scores
            .iter()
            .rev()
            .find(|s| s.log_prob > f64::NEG_INFINITY)
            .expect("normalised posterior")
            .parents
    }

    pub fn sample_graph<R: Rng + ?Sized>(&self, rng: &mut R) -> Graph {
        let parents = (0..self.num_nodes()).map(|n| self.sample_parents(n, rng)).collect();
        Graph::from_parent_sets(parents).expect("candidate sets exclude self-loops")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Scores every candidate parent set of every node from a family table.
///
/// `log_prior(n, parents)` is the unnormalised log prior over parent sets.
pub fn structure_posterior_from_table<F>(
    table: &FamilyTable,
    prior: GammaPrior,
    log_prior: F,
    exec: Exec,
) -> Result<StructurePosterior>
where
    F: Fn(usize, ParentSet) -> f64 + Sync + Send,
{
    prior.validate()?;
    let nodes: Vec<usize> = (0..table.num_nodes()).collect();
    let scores = par::try_map(exec, &nodes, |&n| {
        table
            .candidates(n)
            .iter()
            .enumerate()
            .map(|(i, &ps)| Ok((ps, structure_marginal_log_likelihood(table.stats(n, i), prior)? + log_prior(n, ps))))
            .collect::<Result<Vec<_>>>()
    })?;
    StructurePosterior::from_log_scores(scores)
}

/// Exhaustive structure posterior with a uniform prior over parent sets.
pub fn structure_posterior(
    trajectories: &[Trajectory],
    cards: &[usize],
    max_parents: usize,
    prior: GammaPrior,
    exec: Exec,
) -> Result<StructurePosterior> {
    let mut table = FamilyTable::new(cards, max_parents)?;
    for t in trajectories {
        table.add(t)?;
    }
    structure_posterior_from_table(&table, prior, |_, _| 0.0, exec)
}

/// `Σ_n H(p(par(n)))` in nats.
pub fn posterior_entropy(posterior: &StructurePosterior) -> f64 {
    posterior
        .nodes
        .iter()
        .map(|scores| {
            -scores
                .iter()
                .filter(|s| s.log_prob > f64::NEG_INFINITY)
                .map(|s| s.log_prob.exp() * s.log_prob)
                .sum::<f64>()
        })
        .sum::<f64>()
        .max(0.0)
}

/// `P(m → n)` as `probs[m][n]`; the diagonal is zero.
pub fn edge_marginals(posterior: &StructurePosterior) -> Vec<Vec<f64>> {
    let n = posterior.num_nodes();
    let mut out = vec![vec![0.0; n]; n];
    for (to, scores) in posterior.nodes.iter().enumerate() {
        for s in scores {
            let p = s.log_prob.exp();
            for from in s.parents.iter() {
                out[from][to] += p;
            }
        }
    }
    out
}
