//! Design criteria for choosing the next intervention.
//!
//! Every criterion scores a candidate by how far the data it would produce
//! is expected to move the posterior: BHC fixes the variational
//! distribution to the posterior, VBHC minimises over it, EIG is the nested
//! Monte-Carlo information gain. Posterior draws are shared across
//! candidates (common random numbers).

mod eig;
mod kl;
mod optim;
mod params;
mod select;
mod structure;

pub use eig::{eig_parameters, eig_structure};
pub use kl::{expected_log_evidence, kl_ctbn_rates, kl_marginal_structures_approx};
pub use optim::{CriterionValue, OptimizerConfig, TraceEntry};
pub use params::{draw_rate_samples, ParameterCriterion};
pub use select::{evaluate_candidates, select_intervention, Belief, DesignConfig, Selection, Strategy, Target};
pub use structure::{draw_structure_samples, project_simplex_floor, StructureCriterion, StructureSamples, StructureSupport};

use crate::engine::{endpoint_statistics, project_statistics, ExpectedStats, IntegratorConfig};
use crate::error::Result;
use crate::model::{amalgamate, Ctbn, Graph, Intervention, JointSpace};
use crate::stats::NodeStats;

/// Expected joint statistics of `model` under `intervention` from `s0`,
/// with clamped coordinates of `s0` overridden.
pub(crate) fn solve_joint(
    model: &Ctbn,
    intervention: &Intervention,
    s0: &[usize],
    horizon: f64,
    integrator: &IntegratorConfig,
) -> Result<(ExpectedStats, JointSpace)> {
    let mut start = s0.to_vec();
    intervention.force_initial(&mut start);
    let ctmc = amalgamate(model, intervention, &start)?;
    let stats = endpoint_statistics(&ctmc, ctmc.initial(), horizon, integrator)?;
    Ok((stats, ctmc.space().clone()))
}

/// [`solve_joint`] projected under `graph`.
pub(crate) fn solve_projected(
    model: &Ctbn,
    intervention: &Intervention,
    s0: &[usize],
    horizon: f64,
    graph: &Graph,
    integrator: &IntegratorConfig,
) -> Result<Vec<NodeStats>> {
    let (joint, space) = solve_joint(model, intervention, s0, horizon, integrator)?;
    project_statistics(&joint, &space, graph)
}

/// Mean and standard error of per-sample values.
pub(crate) fn summarize(per_sample: Vec<f64>) -> CriterionValue {
    let n = per_sample.len() as f64;
    let mean = per_sample.iter().sum::<f64>() / n;
    let std_error = if per_sample.len() > 1 {
        (per_sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    CriterionValue {
        value: mean,
        std_error,
        per_sample,
        trace: Vec::new(),
    }
}
