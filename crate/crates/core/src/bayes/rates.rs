use crate::error::{Error, Result};
use crate::model::{num_configs, Ctbn, Graph, NodeRates, NodeShape};
use crate::rng::{stream, SimRng};
use crate::sim::SufficientStats;
use crate::special::{gamma_kl, ln_gamma_pdf};
use crate::stats::NodeStats;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

/// Shape and rate of the per-cell gamma prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for GammaPrior {
    fn default() -> Self {
        GammaPrior { alpha: 1.0, beta: 1.0 }
    }
}

impl GammaPrior {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0 && self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::Hyperparameter(format!(
                "gamma prior needs alpha, beta > 0, got ({}, {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// Independent gamma distributions over the off-diagonal rates of one node.
///
/// `alpha` is indexed like transition counts (diagonal slots unused),
/// `beta` like dwell times: every `x → x'` cell shares `β(x, u)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeGamma {
    pub card: usize,
    pub num_configs: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl NodeGamma {
    pub fn prior(shape: NodeShape, prior: GammaPrior) -> Self {
        let mut alpha = vec![0.0; shape.trans_len()];
        for (u, x, x2) in shape.off_diagonal() {
            alpha[shape.trans_index(u, x, x2)] = prior.alpha;
        }
        NodeGamma {
            card: shape.card,
            num_configs: shape.num_configs,
            alpha,
            beta: vec![prior.beta; shape.dwell_len()],
        }
    }

    pub fn shape(&self) -> NodeShape {
        NodeShape {
            card: self.card,
            num_configs: self.num_configs,
        }
    }

    #[inline]
    pub fn alpha(&self, u: usize, x: usize, x2: usize) -> f64 {
        self.alpha[self.shape().trans_index(u, x, x2)]
    }

    #[inline]
    pub fn beta(&self, u: usize, x: usize) -> f64 {
        self.beta[self.shape().dwell_index(u, x)]
    }

    /// Conjugate update `α += M`, `β += T`.
    pub fn updated(&self, stats: &NodeStats) -> Result<NodeGamma> {
        if stats.shape() != self.shape() {
            return Err(Error::Dimension(format!(
                "statistics of shape {}x{} do not match posterior {}x{}",
                stats.num_configs, stats.card, self.num_configs, self.card
            )));
        }
        let mut out = self.clone();
        for (u, x, x2) in self.shape().off_diagonal() {
            let i = self.shape().trans_index(u, x, x2);
            out.alpha[i] += stats.trans[i];
        }
        for (b, t) in out.beta.iter_mut().zip(&stats.dwell) {
            *b += t;
        }
        Ok(out)
    }

    pub fn mean(&self) -> NodeRates {
        let mut r = NodeRates::zeros(self.card, self.num_configs);
        for (u, x, x2) in self.shape().off_diagonal() {
            r.set(u, x, x2, self.alpha(u, x, x2) / self.beta(u, x)).expect("positive mean");
        }
        r
    }

    /// One draw per cell; zero draws are lifted to the smallest positive
    /// double so sampled rates stay strictly positive.
    pub fn sample(&self, rng: &mut SimRng) -> NodeRates {
        let mut r = NodeRates::zeros(self.card, self.num_configs);
        for (u, x, x2) in self.shape().off_diagonal() {
            let g = Gamma::new(self.alpha(u, x, x2), 1.0 / self.beta(u, x)).expect("valid gamma parameters");
            r.set(u, x, x2, g.sample(rng).max(f64::MIN_POSITIVE)).expect("positive draw");
        }
        r
    }

    /// `Σ_cells ln Gam(Λ | α, β)`.
    pub fn log_density(&self, rates: &NodeRates) -> f64 {
        self.shape()
            .off_diagonal()
            .map(|(u, x, x2)| ln_gamma_pdf(rates.rate(u, x, x2), self.alpha(u, x, x2), self.beta(u, x)))
            .sum()
    }

    /// `Σ KL(self ‖ other)` over the cells of configuration `u`, or all
    /// configurations when `u` is `None`.
    pub fn kl_to(&self, other: &NodeGamma, u: Option<usize>) -> f64 {
        self.shape()
            .off_diagonal()
            .filter(|&(uu, _, _)| u.map_or(true, |v| v == uu))
            .map(|(uu, x, x2)| {
                gamma_kl(
                    self.alpha(uu, x, x2),
                    self.beta(uu, x),
                    other.alpha(uu, x, x2),
                    other.beta(uu, x),
                )
            })
            .sum()
    }
}

/// Gamma posterior over the condition-0 rates of every node under a graph.
///
/// Updates add into `data` and rebuild `nodes` as `prior + data`, so a
/// sequence of updates and one update with the pooled statistics perform
/// the same floating-point operations. Variational parameter sets reuse this
/// type; for them only `nodes` is meaningful.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePosterior {
    pub cards: Vec<usize>,
    pub graph: Graph,
    pub nodes: Vec<NodeGamma>,
    pub prior: Vec<NodeGamma>,
    /// Accumulated condition-0 statistics per node.
    pub data: Vec<NodeStats>,
}

impl RatePosterior {
    pub fn prior(cards: &[usize], graph: &Graph, prior: GammaPrior) -> Result<Self> {
        prior.validate()?;
        if graph.num_nodes() != cards.len() {
            return Err(Error::Dimension("graph and cardinalities disagree".into()));
        }
        let nodes = (0..cards.len())
            .map(|n| {
                NodeGamma::prior(
                    NodeShape {
                        card: cards[n],
                        num_configs: num_configs(cards, graph.parents(n)),
                    },
                    prior,
                )
            })
            .collect::<Vec<NodeGamma>>();
        Ok(RatePosterior {
            cards: cards.to_vec(),
            graph: graph.clone(),
            data: nodes.iter().map(|g| NodeStats::zeros(g.shape())).collect(),
            prior: nodes.clone(),
            nodes,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.cards.len()
    }

    pub fn node(&self, n: usize) -> &NodeGamma {
        &self.nodes[n]
    }

    /// Adds the condition-0 statistics of `stats`; interventional
    /// statistics of a node leave its posterior untouched.
    pub fn update(&self, stats: &SufficientStats) -> Result<RatePosterior> {
        if stats.graph() != &self.graph || stats.cards() != self.cards.as_slice() {
            return Err(Error::Dimension("statistics were extracted under a different graph".into()));
        }
        let mut out = self.clone();
        for n in 0..self.num_nodes() {
            if let Some(st) = stats.condition(n, crate::model::ConditionKey::Observed) {
                out.add_to_node(n, st)?;
            }
        }
        Ok(out)
    }

    /// Adds `stats` to node `n`'s data and rebuilds its posterior.
    pub fn add_to_node(&mut self, n: usize, stats: &NodeStats) -> Result<()> {
        if stats.shape() != self.prior[n].shape() {
            return Err(Error::Dimension(format!("statistics for node {n} have the wrong shape")));
        }
        self.data[n].accumulate(stats)?;
        self.nodes[n] = self.prior[n].updated(&self.data[n])?;
        Ok(())
    }

    /// Update with (possibly expected) node statistics given directly.
    pub fn update_with_node_stats(&self, stats: &[NodeStats]) -> Result<RatePosterior> {
        if stats.len() != self.num_nodes() {
            return Err(Error::Dimension("one statistics table per node required".into()));
        }
        let mut out = self.clone();
        for (n, st) in stats.iter().enumerate() {
            out.add_to_node(n, st)?;
        }
        Ok(out)
    }

    pub fn mean_model(&self) -> Result<Ctbn> {
        Ctbn::new(self.cards.clone(), self.graph.clone(), self.nodes.iter().map(NodeGamma::mean).collect())
    }

    /// Draws a model; node `n` uses the stream `(seed, n)`, so the draw of
    /// one node does not depend on any other node's posterior.
    pub fn sample(&self, seed: u64) -> Ctbn {
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(n, g)| g.sample(&mut stream(seed, &[n as u64])))
            .collect();
        Ctbn::new(self.cards.clone(), self.graph.clone(), nodes).expect("posterior shapes match the graph")
    }

    pub fn log_density(&self, model: &Ctbn) -> f64 {
        self.nodes.iter().zip(model.nodes()).map(|(g, r)| g.log_density(r)).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
