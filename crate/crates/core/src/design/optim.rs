use serde::{Deserialize, Serialize};
use std::fmt::Write;

/// Stopping and line-search policy shared by the variational optimizers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Stop when `(f_old − f_new) / max(|f_old|, 1) < rel_tol`.
    pub rel_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Smallest step tried by the backtracking search.
    pub min_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iters: 500,
            rel_tol: 1e-8,
            armijo: 1e-4,
            min_step: 1e-12,
        }
    }
}

/// One accepted optimizer iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub value: f64,
    pub step: f64,
    pub grad_norm: f64,
}

/// A criterion evaluation.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct CriterionValue {
    /// Criterion value in nats.
    pub value: f64,
    /// Monte-Carlo standard error where meaningful, else 0.
    pub std_error: f64,
    /// Contribution of each posterior sample (their mean is `value` up to
    /// the sample-independent terms).
    pub per_sample: Vec<f64>,
    /// Accepted iterations, starting with the initial point as iteration 0.
    pub trace: Vec<TraceEntry>,
}

impl CriterionValue {
    pub fn initial_value(&self) -> Option<f64> {
        self.trace.first().map(|t| t.value)
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,value,step,grad_norm\n");
        for t in &self.trace {
            writeln!(out, "{},{:e},{:e},{:e}", t.iter, t.value, t.step, t.grad_norm).expect("write to string");
        }
        out
    }
}

/// Relative improvement used by the stopping rule.
pub(crate) fn rel_improvement(old: f64, new: f64) -> f64 {
    (old - new) / old.abs().max(1.0)
}
