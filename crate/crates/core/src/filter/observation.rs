use crate::error::{Error, Result};
use crate::model::JointSpace;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Observation likelihoods `p(Y(t_i) | S(t_i) = s)` over joint states at
/// increasing times.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSeries {
    times: Vec<f64>,
    likelihoods: Vec<Vec<f64>>,
}

impl ObservationSeries {
    pub fn empty() -> Self {
        ObservationSeries {
            times: Vec::new(),
            likelihoods: Vec::new(),
        }
    }

    pub fn new(times: Vec<f64>, likelihoods: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != likelihoods.len() {
            return Err(Error::Dimension("one likelihood table per observation time required".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::InvalidArgument("observation times must be finite, non-negative and increasing".into()));
        }
        for (t, l) in times.iter().zip(&likelihoods) {
            if l.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(Error::InvalidArgument(format!("likelihood at t = {t} has a negative or non-finite entry")));
            }
            if l.iter().all(|&v| v == 0.0) {
                return Err(Error::IncompatibleObservation { time: *t });
            }
        }
        Ok(ObservationSeries { times, likelihoods })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn likelihood(&self, i: usize) -> &[f64] {
        &self.likelihoods[i]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Checks every table against the joint space and the horizon.
    pub fn check(&self, size: usize, horizon: f64) -> Result<()> {
        if let Some(l) = self.likelihoods.iter().find(|l| l.len() != size) {
            return Err(Error::Dimension(format!("likelihood table has {} entries, expected {size}", l.len())));
        }
        if let Some(&t) = self.times.last() {
            if t > horizon {
                return Err(Error::InvalidArgument(format!("observation at t = {t} beyond the horizon {horizon}")));
            }
        }
        Ok(())
    }
}

/// Likelihood of observing joint state `observed` when each node's reading
/// is replaced, with probability `flip[n]`, by one of its other states
/// chosen uniformly.
pub fn noisy_categorical(space: &JointSpace, observed: &[usize], flip: &[f64]) -> Result<Vec<f64>> {
    space.check_state(observed)?;
    if flip.len() != space.num_nodes() || flip.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::InvalidArgument("one flip probability in [0, 1] per node required".into()));
    }
    let cards = space.cards();
    Ok((0..space.size())
        .map(|s| {
            (0..space.num_nodes())
                .map(|n| {
                    if space.coord(s, n) == observed[n] {
                        1.0 - flip[n]
                    } else if cards[n] > 1 {
                        flip[n] / (cards[n] - 1) as f64
                    } else {
                        0.0
                    }
                })
                .product()
        })
        .collect())
}

/// One entry of an observation document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservationEntry {
    /// Full likelihood table over joint states.
    Table { time: f64, likelihood: Vec<f64> },
    /// Observed joint state with per-node flip probabilities.
    Noisy { time: f64, state: Vec<usize>, flip: Vec<f64> },
}

/// JSON observation document: `{"observations": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationDocument {
    pub observations: Vec<ObservationEntry>,
}

impl ObservationDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Expands shorthand entries into likelihood tables.
    pub fn to_series(&self, space: &JointSpace) -> Result<ObservationSeries> {
        let mut times = Vec::with_capacity(self.observations.len());
        let mut tables = Vec::with_capacity(self.observations.len());
        for (i, e) in self.observations.iter().enumerate() {
            let (t, l) = match e {
                ObservationEntry::Table { time, likelihood } => (*time, likelihood.clone()),
                ObservationEntry::Noisy { time, state, flip } => (
                    *time,
                    noisy_categorical(space, state, flip)
                        .map_err(|err| Error::InvalidArgument(format!("observation {i}: {err}")))?,
                ),
            };
            if l.len() != space.size() {
                return Err(Error::Dimension(format!(
                    "observation {i}: likelihood has {} entries, expected {}",
                    l.len(),
                    space.size()
                )));
            }
            times.push(t);
            tables.push(l);
        }
        ObservationSeries::new(times, tables)
    }
}
