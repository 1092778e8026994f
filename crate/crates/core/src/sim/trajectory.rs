use crate::error::{Error, Result};
use crate::model::{Intervention, JointSpace};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A single-node jump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub node: usize,
    pub state: usize,
}

/// Piecewise-constant path on `[0, horizon]` stored as its jumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: Vec<usize>,
    pub events: Vec<Event>,
    pub horizon: f64,
    pub intervention: Intervention,
}

impl Trajectory {
    pub fn new(initial: Vec<usize>, events: Vec<Event>, horizon: f64, intervention: Intervention) -> Self {
        Trajectory {
            initial,
            events,
            horizon,
            intervention,
        }
    }

    /// Checks times, states and that every event changes its node.
    pub fn validate(&self, cards: &[usize]) -> Result<()> {
        let space = JointSpace::new(cards);
        space.check_state(&self.initial)?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Trajectory(format!("horizon {} is not positive", self.horizon)));
        }
        if self.intervention.num_nodes() != cards.len() {
            return Err(Error::Trajectory(format!(
                "intervention covers {} nodes, expected {}",
                self.intervention.num_nodes(),
                cards.len()
            )));
        }
        let mut state = self.initial.clone();
        let mut last = 0.0;
        for (i, e) in self.events.iter().enumerate() {
            if !(e.time > last && e.time <= self.horizon) {
                return Err(Error::Trajectory(format!(
                    "event {i} at t={} is not in ({last}, {}]",
                    e.time, self.horizon
                )));
            }
            if e.node >= cards.len() || e.state >= cards[e.node] {
                return Err(Error::Trajectory(format!(
                    "event {i} sets node {} to invalid state {}",
                    e.node, e.state
                )));
            }
            if state[e.node] == e.state {
                return Err(Error::Trajectory(format!("event {i} does not change node {}", e.node)));
            }
            state[e.node] = e.state;
            last = e.time;
        }
        Ok(())
    }

    /// Joint state just after the last event at or before `t`.
    pub fn state_at(&self, t: f64) -> Vec<usize> {
        let mut state = self.initial.clone();
        for e in self.events.iter().take_while(|e| e.time <= t) {
            state[e.node] = e.state;
        }
        state
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Reads either a single trajectory document or an array of them.
pub fn read_trajectories(path: &Path) -> Result<Vec<Trajectory>> {
    let text = std::fs::read_to_string(path)?;
    parse_trajectories(&text)
}

pub fn parse_trajectories(text: &str) -> Result<Vec<Trajectory>> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    match value {
        serde_json::Value::Array(items) => items
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                serde_json::from_value(v).map_err(|e| Error::Trajectory(format!("entry {i}: {e}")))
            })
            .collect(),
        v => Ok(vec![serde_json::from_value(v).map_err(|e| Error::Trajectory(e.to_string()))?]),
    }
}

pub fn write_trajectories(path: &Path, trajectories: &[Trajectory]) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(trajectories)? + "\n")?;
    Ok(())
}
