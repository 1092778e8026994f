use super::ctbn::{num_configs, Ctbn, NodeRates};
use super::graph::Graph;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speed {
    Fast,
    Slow,
}

/// How ground-truth rates are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum GenerationMode {
    /// Every off-diagonal cell is an independent `Gam(shape, rate)` draw,
    /// with the shape chosen by the node's speed.
    Gamma {
        shape_fast: f64,
        shape_slow: f64,
        rate_fast: f64,
        rate_slow: f64,
    },
    /// `Λ(x, x', u) = r · exp(γ c(x', u)) / Σ_z exp(γ c(z, u))`, where
    /// `c(z, u)` counts the parents in state `z` and the sum runs over all
    /// states of the node. Deterministic.
    Softmax {
        gamma: f64,
        scale_fast: f64,
        scale_slow: f64,
    },
}

impl GenerationMode {
    pub fn default_gamma() -> Self {
        GenerationMode::Gamma {
            shape_fast: 5.0,
            shape_slow: 0.2,
            rate_fast: 1.0,
            rate_slow: 1.0,
        }
    }

    pub fn default_softmax() -> Self {
        GenerationMode::Softmax {
            gamma: 3.0,
            scale_fast: 5.0,
            scale_slow: 0.2,
        }
    }
}

/// Everything needed to generate a ground-truth model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub cards: Vec<usize>,
    pub speeds: Vec<Speed>,
    /// Directed edges `(from, to)`.
    pub edges: Vec<(usize, usize)>,
    pub generation: GenerationMode,
}

impl ModelSpec {
    pub fn graph(&self) -> Result<Graph> {
        Graph::from_edges(self.cards.len(), &self.edges)
    }

    fn validate(&self) -> Result<()> {
        if self.cards.is_empty() {
            return Err(Error::Dimension("model needs at least one node".into()));
        }
        if self.speeds.len() != self.cards.len() {
            return Err(Error::Dimension(format!(
                "{} speed labels for {} nodes",
                self.speeds.len(),
                self.cards.len()
            )));
        }
        if let Some(n) = self.cards.iter().position(|&c| c < 2) {
            return Err(Error::Dimension(format!("node {n} has fewer than 2 states")));
        }
        let positive = match &self.generation {
            GenerationMode::Gamma {
                shape_fast,
                shape_slow,
                rate_fast,
                rate_slow,
            } => [*shape_fast, *shape_slow, *rate_fast, *rate_slow].iter().all(|v| *v > 0.0 && v.is_finite()),
            GenerationMode::Softmax {
                gamma,
                scale_fast,
                scale_slow,
            } => gamma.is_finite() && *scale_fast > 0.0 && *scale_slow > 0.0,
        };
        if !positive {
            return Err(Error::Hyperparameter("generation parameters must be positive and finite".into()));
        }
        Ok(())
    }
}

/// Draws a ground-truth model; softmax mode ignores `rng`.
pub fn random_model(spec: &ModelSpec, rng: &mut SimRng) -> Result<Ctbn> {
    spec.validate()?;
    let graph = spec.graph()?;
    let mut nodes = Vec::with_capacity(spec.cards.len());
    for (n, &card) in spec.cards.iter().enumerate() {
        let parents = graph.parents(n);
        let configs = num_configs(&spec.cards, parents);
        let mut rates = NodeRates::zeros(card, configs);
        let fast = spec.speeds[n] == Speed::Fast;
        match &spec.generation {
            GenerationMode::Gamma {
                shape_fast,
                shape_slow,
                rate_fast,
                rate_slow,
            } => {
                let (shape, rate) = if fast {
                    (*shape_fast, *rate_fast)
                } else {
                    (*shape_slow, *rate_slow)
                };
                let dist = Gamma::new(shape, 1.0 / rate)
                    .map_err(|e| Error::Hyperparameter(e.to_string()))?;
                for (u, x, x2) in rates.shape().off_diagonal().collect::<Vec<_>>() {
                    rates.set(u, x, x2, dist.sample(rng).max(f64::MIN_POSITIVE))?;
                }
            }
            GenerationMode::Softmax {
                gamma,
                scale_fast,
                scale_slow,
            } => {
                let scale = if fast { *scale_fast } else { *scale_slow };
                let parent_list = parents.to_vec();
                for u in 0..configs {
                    let mut rest = u;
                    let mut count = vec![0usize; card];
                    for &m in &parent_list {
                        let y = rest % spec.cards[m];
                        rest /= spec.cards[m];
                        if y < card {
                            count[y] += 1;
                        }
                    }
                    let logits: Vec<f64> = count.iter().map(|&c| gamma * c as f64).collect();
                    let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let z: f64 = logits.iter().map(|l| (l - top).exp()).sum();
                    for x in 0..card {
                        for x2 in 0..card {
                            if x2 != x {
                                rates.set(u, x, x2, scale * (logits[x2] - top).exp() / z)?;
                            }
                        }
                    }
                }
            }
        }
        nodes.push(rates);
    }
    Ctbn::new(spec.cards.clone(), graph, nodes)
}

/// A named, fully determined ground-truth configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub spec: ModelSpec,
    /// Seed of the rate draw (irrelevant for softmax mode).
    pub seed: u64,
}

pub const PRESET_NAMES: [&str; 2] = ["synthetic-structure", "synthetic-parameters"];

/// Four binary nodes, two slow sources feeding two fast nodes, gamma rates.
pub fn synthetic_structure() -> Preset {
    Preset {
        name: "synthetic-structure",
        spec: ModelSpec {
            cards: vec![2; 4],
            speeds: vec![Speed::Slow, Speed::Slow, Speed::Fast, Speed::Fast],
            edges: vec![(0, 2), (1, 2), (1, 3), (2, 3)],
            generation: GenerationMode::default_gamma(),
        },
        seed: 7,
    }
}

/// Four binary nodes, three slow parents of one fast node, softmax rates.
pub fn synthetic_parameters() -> Preset {
    Preset {
        name: "synthetic-parameters",
        spec: ModelSpec {
            cards: vec![2; 4],
            speeds: vec![Speed::Slow, Speed::Slow, Speed::Slow, Speed::Fast],
            edges: vec![(0, 3), (1, 3), (2, 3)],
            generation: GenerationMode::default_softmax(),
        },
        seed: 0,
    }
}

pub fn preset(name: &str) -> Result<Preset> {
    match name {
        "synthetic-structure" => Ok(synthetic_structure()),
        "synthetic-parameters" => Ok(synthetic_parameters()),
        _ => Err(Error::InvalidArgument(format!(
            "unknown preset {name:?}; expected one of {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

impl Preset {
    pub fn model(&self) -> Result<Ctbn> {
        random_model(&self.spec, &mut crate::rng::stream(self.seed, &[]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn softmax_without_parents_is_uniform() {
        let spec = ModelSpec {
            cards: vec![3],
            speeds: vec![Speed::Fast],
            edges: vec![],
            generation: GenerationMode::default_softmax(),
        };
        let m = random_model(&spec, &mut stream(0, &[])).unwrap();
        for (_, u, x, x2) in m.cells() {
            assert!((m.node(0).rate(u, x, x2) - 5.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_agreement_ratio_is_e_cubed() {
        let spec = ModelSpec {
            cards: vec![2, 2],
            speeds: vec![Speed::Slow, Speed::Fast],
            edges: vec![(0, 1)],
            generation: GenerationMode::default_softmax(),
        };
        let m = random_model(&spec, &mut stream(0, &[])).unwrap();
        let y = m.node(1);
        // 0 -> 1 with parent in state 1 (agrees with target) vs parent in 0.
        let agree = y.rate(1, 0, 1);
        let disagree = y.rate(0, 0, 1);
        assert!((agree / disagree - 3f64.exp()).abs() < 1e-10);
        assert!((agree - 5.0 * 3f64.exp() / (1.0 + 3f64.exp())).abs() < 1e-12);
    }

    #[test]
    fn gamma_mode_is_seed_deterministic() {
        let p = synthetic_structure();
        let a = random_model(&p.spec, &mut stream(3, &[])).unwrap();
        let b = random_model(&p.spec, &mut stream(3, &[])).unwrap();
        let c = random_model(&p.spec, &mut stream(4, &[])).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.cells().iter().all(|&(n, u, x, x2)| a.node(n).rate(u, x, x2) > 0.0));
    }

    #[test]
    fn presets_resolve() {
        for name in PRESET_NAMES {
            let p = preset(name).unwrap();
            assert_eq!(p.model().unwrap().num_nodes(), 4);
        }
        assert!(preset("nope").is_err());
    }
}
