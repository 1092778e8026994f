//! Conjugate rate posteriors, marginal likelihoods and structure posteriors.

mod likelihood;
mod rates;
mod structure;

pub use likelihood::{node_log_likelihood, path_log_likelihood, structure_marginal_log_likelihood};
pub use rates::{GammaPrior, NodeGamma, RatePosterior};
pub use structure::{
    edge_marginals, posterior_entropy, structure_posterior, structure_posterior_from_table, FamilyTable,
    ParentSetScore, StructurePosterior,
};

#[cfg(test)]
mod tests;
