//! Bayesian active learning for continuous-time Bayesian networks.
//!
//! The crate covers the generative model and its interventions
//! ([`model`]), master-equation moments ([`engine`]), Gillespie sampling and
//! sufficient statistics ([`sim`]), conjugate rate and structure posteriors
//! ([`bayes`]), information-theoretic design criteria ([`design`]), the
//! closed experiment loop ([`active`]) and smoothing of partially observed
//! paths ([`filter`]).

pub mod error;
pub mod model;
pub mod par;
pub mod rng;
pub mod special;
pub mod stats;
pub mod engine;
pub mod sim;
pub mod bayes;
pub mod design;
pub mod active;
pub mod filter;

pub use error::{Error, Result};
