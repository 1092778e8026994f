//! Continuous-time Bayesian networks, interventions and amalgamation.

mod amalgamate;
mod ctbn;
mod generate;
mod graph;
mod intervention;
mod io;

pub use amalgamate::{amalgamate, build_generator, AmalgamatedCtmc};
pub use ctbn::{config_index, num_configs, Ctbn, JointSpace, NodeRates, NodeShape};
pub use generate::{
    preset, random_model, synthetic_parameters, synthetic_structure, GenerationMode, ModelSpec, Preset, Speed,
    PRESET_NAMES,
};
pub use graph::{candidate_parent_sets, Graph, ParentSet, MAX_NODES};
pub use intervention::{apply_intervention, clamp_candidates, override_digest, ConditionKey, Intervention, NodeCondition};
pub use io::{ModelDocument, Provenance};
