use super::rates::GammaPrior;
use crate::error::{Error, Result};
use crate::model::{ConditionKey, Ctbn, NodeRates};
use crate::sim::SufficientStats;
use crate::special::ln_gamma;
use crate::stats::NodeStats;

/// `Σ_cells M ln Λ − T(x, u) Λ(x, x', u)` of one node.
pub fn node_log_likelihood(stats: &NodeStats, rates: &NodeRates, node: usize) -> Result<f64> {
    if stats.shape() != rates.shape() {
        return Err(Error::Dimension(format!("node {node}: statistics and rates differ in shape")));
    }
    let mut ll = 0.0;
    for (u, x, x2) in rates.shape().off_diagonal() {
        let lam = rates.rate(u, x, x2);
        let m = stats.trans(u, x, x2);
        if m > 0.0 {
            if lam <= 0.0 {
                return Err(Error::ZeroRateWithCount { node });
            }
            ll += m * lam.ln();
        }
        ll -= stats.dwell(u, x) * lam;
    }
    Ok(ll)
}

/// Log-likelihood of pooled statistics under `model`: every condition
/// is scored with its own rates (condition 0 with the model's, clamps
/// with zero rates, overrides with their stored tensors).
pub fn path_log_likelihood(stats: &SufficientStats, model: &Ctbn) -> Result<f64> {
    if stats.graph() != model.graph() || stats.cards() != model.cards() {
        return Err(Error::Dimension("statistics were extracted under a different graph".into()));
    }
    let mut ll = 0.0;
    for n in 0..model.num_nodes() {
        let node = stats.node(n);
        for (key, st) in &node.by_condition {
            match key {
                ConditionKey::Observed => ll += node_log_likelihood(st, model.node(n), n)?,
                ConditionKey::Clamp(_) => {
                    if st.total_trans() > 0.0 {
                        return Err(Error::ZeroRateWithCount { node: n });
                    }
                }
                ConditionKey::Override(h) => {
                    let r = node.overrides.get(h).ok_or_else(|| {
                        Error::InvalidArgument(format!("node {n}: override tensor for condition {h:x} missing"))
                    })?;
                    ll += node_log_likelihood(st, r, n)?;
                }
            }
        }
    }
    Ok(ll)
}

/// Closed-form log marginal likelihood of one node's statistics under a
/// parent set, including the prior normaliser:
/// `Σ_{u,x,x'≠x} ln Γ(α+M) − (α+M) ln(β+T) − ln Γ(α) + α ln β`.
pub fn structure_marginal_log_likelihood(stats: &NodeStats, prior: GammaPrior) -> Result<f64> {
    prior.validate()?;
    let norm = prior.alpha * prior.beta.ln() - ln_gamma(prior.alpha);
    let lg_a = ln_gamma(prior.alpha);
    let mut total = 0.0;
    for (u, x, x2) in stats.shape().off_diagonal() {
        let m = stats.trans(u, x, x2);
        let t = stats.dwell(u, x);
        if m == 0.0 && t == 0.0 {
            continue;
        }
        let a = prior.alpha + m;
        let lg = if m == 0.0 { lg_a } else { ln_gamma(a) };
        total += lg - a * (prior.beta + t).ln() + norm;
    }
    Ok(total)
}
