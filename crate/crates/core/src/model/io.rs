use super::ctbn::{Ctbn, NodeRates};
use super::generate::ModelSpec;
use super::graph::Graph;
use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// How a stored model was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub seed: u64,
    pub spec: ModelSpec,
}

/// JSON form of a model.
///
/// `rates[n][u][x][x']` follows the parent-configuration order of
/// [`crate::model::JointSpace`]; diagonals are written as minus the exit
/// rate and ignored on read.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub cards: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub rates: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl ModelDocument {
    pub fn from_model(model: &Ctbn, provenance: Option<Provenance>) -> Self {
        ModelDocument {
            cards: model.cards().to_vec(),
            edges: model.graph().edges(),
            rates: model.nodes().iter().map(NodeRates::to_nested).collect(),
            provenance,
        }
    }

    pub fn to_model(&self) -> Result<Ctbn> {
        let graph = Graph::from_edges(self.cards.len(), &self.edges)?;
        let nodes = self
            .rates
            .iter()
            .map(|r| NodeRates::from_nested(r))
            .collect::<Result<Vec<_>>>()?;
        Ctbn::new(self.cards.clone(), graph, nodes)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate::synthetic_structure;

    #[test]
    fn json_round_trip_is_exact() {
        let p = synthetic_structure();
        let m = p.model().unwrap();
        let doc = ModelDocument::from_model(
            &m,
            Some(Provenance {
                preset: Some(p.name.into()),
                seed: p.seed,
                spec: p.spec.clone(),
            }),
        );
        let back = ModelDocument::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_model().unwrap(), m);
    }
}
