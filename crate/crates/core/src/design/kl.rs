use crate::bayes::NodeGamma;
use crate::error::{Error, Result};
use crate::model::Ctbn;
use crate::special::ln_gamma;
use crate::stats::NodeStats;

/// KL divergence between the path measures of two rate tensors sharing a
/// graph and intervention, from expected statistics under `lam`:
/// `Σ_{n∈ℵ} Σ_cells (Λ' − Λ) E[T̂] + ln(Λ/Λ') E[M̂]`.
pub fn kl_ctbn_rates(lam: &Ctbn, lam_prime: &Ctbn, expected: &[NodeStats], aleph: &[bool]) -> Result<f64> {
    if lam.graph() != lam_prime.graph() || expected.len() != lam.num_nodes() || aleph.len() != lam.num_nodes() {
        return Err(Error::Dimension("rate tensors, statistics and node set must agree".into()));
    }
    let mut kl = 0.0;
    for n in (0..lam.num_nodes()).filter(|&n| aleph[n]) {
        let (r, r2, st) = (lam.node(n), lam_prime.node(n), &expected[n]);
        if st.shape() != r.shape() {
            return Err(Error::Dimension(format!("node {n}: statistics do not match the rate tensor")));
        }
        for (u, x, x2) in r.shape().off_diagonal() {
            let (a, b) = (r.rate(u, x, x2), r2.rate(u, x, x2));
            let m = st.trans(u, x, x2);
            kl += (b - a) * st.dwell(u, x);
            if m > 0.0 {
                if b <= 0.0 || a <= 0.0 {
                    return Err(Error::ZeroRateWithCount { node: n });
                }
                kl += (a / b).ln() * m;
            }
        }
    }
    Ok(kl)
}

/// `ln Γ(α) − α ln β`, the data-dependent part of a gamma normaliser.
#[inline]
fn g(alpha: f64, beta: f64) -> f64 {
    ln_gamma(alpha) - alpha * beta.ln()
}

/// First-order log evidence of expected statistics under a node posterior:
/// `Σ_{u,x,x'≠x} g(ᾱ + E[M̂], β̄ + E[T̂]) − g(ᾱ, β̄)`.
pub fn expected_log_evidence(stats: &NodeStats, posterior: &NodeGamma) -> Result<f64> {
    if stats.shape() != posterior.shape() {
        return Err(Error::Dimension("statistics and posterior differ in shape".into()));
    }
    let mut total = 0.0;
    for (u, x, x2) in stats.shape().off_diagonal() {
        let m = stats.trans(u, x, x2);
        let t = stats.dwell(u, x);
        if m == 0.0 && t == 0.0 {
            continue;
        }
        let (a, b) = (posterior.alpha(u, x, x2), posterior.beta(u, x));
        debug_assert!(b + t > 0.0);
        total += g(a + m, b + t) - g(a, b);
    }
    Ok(total)
}

/// First-order expansion of the KL between the marginal (rate-integrated)
/// path measures of one node under parent set `par` and `par'`.
///
/// `native` holds expected statistics projected under `par`, `cross` the
/// same joint statistics projected under `par'`; the posteriors carry the
/// history counts for each parent set.
pub fn kl_marginal_structures_approx(
    native: &NodeStats,
    cross: &NodeStats,
    posterior_native: &NodeGamma,
    posterior_cross: &NodeGamma,
) -> Result<f64> {
    Ok(expected_log_evidence(native, posterior_native)? - expected_log_evidence(cross, posterior_cross)?)
}
