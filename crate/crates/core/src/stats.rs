//! Per-node tables of transition counts and dwell times.

use crate::error::{Error, Result};
use crate::model::NodeShape;
use serde::{Deserialize, Serialize};

/// Transition counts `M(x, x', u)` and dwell times `T(x, u)` of one node.
///
/// Counts are `f64` so the same table holds observed integers and
/// expected values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    pub card: usize,
    pub num_configs: usize,
    pub trans: Vec<f64>,
    pub dwell: Vec<f64>,
}

impl NodeStats {
    pub fn zeros(shape: NodeShape) -> Self {
        NodeStats {
            card: shape.card,
            num_configs: shape.num_configs,
            trans: vec![0.0; shape.trans_len()],
            dwell: vec![0.0; shape.dwell_len()],
        }
    }

    pub fn shape(&self) -> NodeShape {
        NodeShape {
            card: self.card,
            num_configs: self.num_configs,
        }
    }

    #[inline]
    pub fn trans(&self, u: usize, x: usize, x2: usize) -> f64 {
        self.trans[self.shape().trans_index(u, x, x2)]
    }

    #[inline]
    pub fn dwell(&self, u: usize, x: usize) -> f64 {
        self.dwell[self.shape().dwell_index(u, x)]
    }

    #[inline]
    pub fn add_trans(&mut self, u: usize, x: usize, x2: usize, v: f64) {
        let i = self.shape().trans_index(u, x, x2);
        self.trans[i] += v;
    }

    #[inline]
    pub fn add_dwell(&mut self, u: usize, x: usize, v: f64) {
        let i = self.shape().dwell_index(u, x);
        self.dwell[i] += v;
    }

    pub fn total_dwell(&self) -> f64 {
        self.dwell.iter().sum()
    }

    pub fn total_trans(&self) -> f64 {
        self.trans.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.trans.iter().chain(&self.dwell).all(|&v| v == 0.0)
    }

    /// Cell-wise sum.
    pub fn accumulate(&mut self, other: &NodeStats) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "cannot pool {}x{} statistics into {}x{}",
                other.num_configs, other.card, self.num_configs, self.card
            )));
        }
        for (a, b) in self.trans.iter_mut().zip(&other.trans) {
            *a += b;
        }
        for (a, b) in self.dwell.iter_mut().zip(&other.dwell) {
            *a += b;
        }
        Ok(())
    }
}
