use super::eig::{eig_parameters, eig_structure};
use super::optim::{CriterionValue, OptimizerConfig};
use super::params::{draw_rate_samples, ParameterCriterion};
use super::structure::{draw_structure_samples, StructureCriterion, StructureSupport};
use crate::bayes::{FamilyTable, GammaPrior, RatePosterior, StructurePosterior};
use crate::engine::IntegratorConfig;
use crate::error::{Error, Result};
use crate::model::Intervention;
use crate::par::{self, Exec};
use crate::rng::stream;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// How the next intervention is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Always the no-op candidate.
    Passive,
    /// Uniform over candidates.
    Random,
    Bhc,
    Vbhc,
    /// Minimises VBHC; a deliberately poor baseline.
    NegVbhc,
    Eig,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Passive,
        Strategy::Random,
        Strategy::Bhc,
        Strategy::Vbhc,
        Strategy::NegVbhc,
        Strategy::Eig,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Passive => "passive",
            Strategy::Random => "random",
            Strategy::Bhc => "bhc",
            Strategy::Vbhc => "vbhc",
            Strategy::NegVbhc => "neg-vbhc",
            Strategy::Eig => "eig",
        }
    }

    /// Whether the strategy scores candidates.
    pub fn is_scored(self) -> bool {
        !matches!(self, Strategy::Passive | Strategy::Random)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown strategy '{s}'")))
    }
}

/// What is being learned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Parameters,
    Structure,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Parameters => "parameters",
            Target::Structure => "structure",
        })
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parameters" => Ok(Target::Parameters),
            "structure" => Ok(Target::Structure),
            _ => Err(Error::InvalidArgument(format!("unknown target '{s}'"))),
        }
    }
}

/// Monte-Carlo sizes and numerical settings of the criteria.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DesignConfig {
    /// Posterior draws `N_S` (per parent set for structure criteria).
    pub num_samples: usize,
    /// Simulated paths per draw `N_P` for parameter EIG.
    pub num_paths: usize,
    /// Experiment duration.
    pub horizon: f64,
    /// Parent sets below this posterior probability are ignored.
    pub support_threshold: f64,
    pub integrator: IntegratorConfig,
    pub optimizer: OptimizerConfig,
    pub exec: Exec,
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig {
            num_samples: 10,
            num_paths: 10,
            horizon: 3.0,
            support_threshold: 1e-6,
            integrator: IntegratorConfig::default(),
            optimizer: OptimizerConfig::default(),
            exec: Exec::default(),
        }
    }
}

/// The current belief the criteria are evaluated against.
#[derive(Clone, Copy, Debug)]
pub enum Belief<'a> {
    Parameters(&'a RatePosterior),
    Structure {
        posterior: &'a StructurePosterior,
        table: &'a FamilyTable,
        prior: GammaPrior,
    },
}

impl Belief<'_> {
    pub fn target(&self) -> Target {
        match self {
            Belief::Parameters(_) => Target::Parameters,
            Belief::Structure { .. } => Target::Structure,
        }
    }
}

/// Outcome of one selection round.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub index: usize,
    /// Criterion per candidate for scored strategies.
    pub values: Option<Vec<CriterionValue>>,
}

/// Scores every candidate with a scored strategy (`neg-vbhc` reports the
/// plain VBHC value). Posterior draws depend on `seed` only, so all
/// candidates see the same draws.
pub fn evaluate_candidates(
    strategy: Strategy,
    belief: Belief<'_>,
    candidates: &[Intervention],
    s0: &[usize],
    config: &DesignConfig,
    seed: u64,
) -> Result<Vec<CriterionValue>> {
    if !strategy.is_scored() {
        return Err(Error::InvalidArgument(format!("strategy '{strategy}' does not score candidates")));
    }
    if config.num_samples == 0 {
        return Err(Error::InvalidArgument("num_samples must be positive".into()));
    }
    match belief {
        Belief::Parameters(posterior) => {
            let samples = draw_rate_samples(posterior, config.num_samples, seed);
            par::try_map(config.exec, candidates, |iv| {
                if strategy == Strategy::Eig {
                    let path_seed = crate::rng::stream_key(seed, &[1]);
                    return eig_parameters(posterior, &samples, iv, s0, config.horizon, config.num_paths, path_seed);
                }
                let crit = ParameterCriterion::prepare(posterior, &samples, iv, s0, config.horizon, &config.integrator)?;
                match strategy {
                    Strategy::Bhc => crit.bhc(),
                    _ => Ok(crit.minimize(&config.optimizer)?.1),
                }
            })
        }
        Belief::Structure { posterior, table, prior } => {
            let support = StructureSupport::new(posterior, table, prior, config.support_threshold)?;
            let samples = draw_structure_samples(posterior, table, prior, support, config.num_samples, seed)?;
            par::try_map(config.exec, candidates, |iv| {
                if strategy == Strategy::Eig {
                    let path_seed = crate::rng::stream_key(seed, &[1]);
                    return eig_structure(&samples, table, posterior, prior, iv, s0, config.horizon, path_seed);
                }
                let crit = StructureCriterion::prepare(&samples, iv, s0, config.horizon, &config.integrator)?;
                match strategy {
                    Strategy::Bhc => crit.bhc(),
                    _ => Ok(crit.minimize(&config.optimizer)?.1),
                }
            })
        }
    }
}

/// Picks the next intervention; ties go to the lowest index.
pub fn select_intervention(
    strategy: Strategy,
    belief: Belief<'_>,
    candidates: &[Intervention],
    s0: &[usize],
    config: &DesignConfig,
    seed: u64,
) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate interventions".into()));
    }
    match strategy {
        Strategy::Passive => {
            let index = candidates
                .iter()
                .position(Intervention::is_none)
                .ok_or_else(|| Error::InvalidArgument("passive design needs the no-op candidate".into()))?;
            Ok(Selection { index, values: None })
        }
        Strategy::Random => Ok(Selection {
            index: stream(seed, &[2]).gen_range(0..candidates.len()),
            values: None,
        }),
        _ => {
            let values = evaluate_candidates(strategy, belief, candidates, s0, config, seed)?;
            let sign = if strategy == Strategy::NegVbhc { -1.0 } else { 1.0 };
            let mut index = 0;
            for (i, v) in values.iter().enumerate() {
                if !v.value.is_finite() {
                    return Err(Error::Optimizer(format!("criterion for candidate {i} is not finite")));
                }
                if sign * v.value > sign * values[index].value {
                    index = i;
                }
            }
            Ok(Selection {
                index,
                values: Some(values),
            })
        }
    }
}
