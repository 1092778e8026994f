use super::kl::kl_ctbn_rates;
use super::optim::{rel_improvement, CriterionValue, OptimizerConfig, TraceEntry};
use super::solve_projected;
use crate::bayes::{NodeGamma, RatePosterior};
use crate::engine::IntegratorConfig;
use crate::error::{Error, Result};
use crate::model::{Ctbn, Intervention};
use crate::rng::stream_key;
use crate::special::{digamma, trigamma};
use crate::stats::NodeStats;

/// Draws `count` rate tensors from `posterior`; sample `k` uses the seed
/// `stream_key(seed, [k])`, so the draws are shared by every candidate.
pub fn draw_rate_samples(posterior: &RatePosterior, count: usize, seed: u64) -> Vec<Ctbn> {
    (0..count)
        .map(|k| posterior.sample(stream_key(seed, &[k as u64])))
        .collect()
}

/// Sample-dependent terms of one node: expected statistics and the
/// constant `Σ E[M̂] ln Λ − E[T̂] Λ`.
#[derive(Clone, Debug)]
struct NodeTerms {
    stats: NodeStats,
    constant: f64,
}

/// The parameter VBHC criterion for one candidate intervention, with the
/// expected statistics of every posterior sample precomputed.
///
/// `V(κ) = KL(q_κ ‖ p) + (1/N) Σ_k Σ_{n∈ℵ} Σ_cells E[M̂](ln Λ_k − ψ(a) + ln b) + E[T̂](a/b − Λ_k)`,
/// which upper-bounds the expected KL between the true and a sampled
/// alternative path measure once minimised over `κ`.
#[derive(Clone, Debug)]
pub struct ParameterCriterion {
    prior: RatePosterior,
    aleph: Vec<bool>,
    samples: Vec<Vec<Option<NodeTerms>>>,
    mean_trans: Vec<Vec<f64>>,
    mean_dwell: Vec<Vec<f64>>,
    mean_constant: f64,
}

impl ParameterCriterion {
    /// Solves the master equation for every posterior sample under
    /// `intervention` from `s0` (clamped coordinates are overridden).
    pub fn prepare(
        posterior: &RatePosterior,
        samples: &[Ctbn],
        intervention: &Intervention,
        s0: &[usize],
        horizon: f64,
        integrator: &IntegratorConfig,
    ) -> Result<Self> {
        let stats = samples
            .iter()
            .map(|m| {
                if m.graph() != &posterior.graph {
                    return Err(Error::Dimension("posterior sample has a different graph".into()));
                }
                solve_projected(m, intervention, s0, horizon, &posterior.graph, integrator)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_statistics(posterior, samples, &stats, &intervention.unintervened())
    }

    /// Builds the criterion from given per-sample node statistics.
    pub fn from_statistics(
        posterior: &RatePosterior,
        samples: &[Ctbn],
        stats: &[Vec<NodeStats>],
        aleph: &[bool],
    ) -> Result<Self> {
        let n = posterior.num_nodes();
        if samples.is_empty() || samples.len() != stats.len() || aleph.len() != n {
            return Err(Error::Dimension("one statistics set per sample and one flag per node required".into()));
        }
        let mut mean_trans: Vec<Vec<f64>> = posterior.nodes.iter().map(|g| vec![0.0; g.alpha.len()]).collect();
        let mut mean_dwell: Vec<Vec<f64>> = posterior.nodes.iter().map(|g| vec![0.0; g.beta.len()]).collect();
        let mut mean_constant = 0.0;
        let w = 1.0 / samples.len() as f64;
        let mut terms = Vec::with_capacity(samples.len());
        for (model, st) in samples.iter().zip(stats) {
            if st.len() != n {
                return Err(Error::Dimension("one statistics table per node required".into()));
            }
            let mut row = Vec::with_capacity(n);
            for m in 0..n {
                if !aleph[m] {
                    row.push(None);
                    continue;
                }
                let s = &st[m];
                let rates = model.node(m);
                if s.shape() != posterior.node(m).shape() || rates.shape() != s.shape() {
                    return Err(Error::Dimension(format!("node {m}: statistics do not match the posterior")));
                }
                let mut constant = 0.0;
                for (u, x, x2) in s.shape().off_diagonal() {
                    let lam = rates.rate(u, x, x2);
                    let em = s.trans(u, x, x2);
                    if em > 0.0 {
                        if lam <= 0.0 {
                            return Err(Error::ZeroRateWithCount { node: m });
                        }
                        constant += em * lam.ln();
                    }
                    constant -= s.dwell(u, x) * lam;
                }
                for (acc, v) in mean_trans[m].iter_mut().zip(&s.trans) {
                    *acc += w * v;
                }
                for (acc, v) in mean_dwell[m].iter_mut().zip(&s.dwell) {
                    *acc += w * v;
                }
                mean_constant += w * constant;
                row.push(Some(NodeTerms {
                    stats: s.clone(),
                    constant,
                }));
            }
            terms.push(row);
        }
        Ok(ParameterCriterion {
            prior: posterior.clone(),
            aleph: aleph.to_vec(),
            samples: terms,
            mean_trans,
            mean_dwell,
            mean_constant,
        })
    }

    pub fn posterior(&self) -> &RatePosterior {
        &self.prior
    }

    pub fn aleph(&self) -> &[bool] {
        &self.aleph
    }

    fn check(&self, q: &RatePosterior) -> Result<()> {
        if q.num_nodes() != self.prior.num_nodes()
            || q.nodes.iter().zip(&self.prior.nodes).any(|(a, b)| a.shape() != b.shape())
        {
            return Err(Error::Dimension("variational parameters do not match the posterior".into()));
        }
        for g in &q.nodes {
            let bad_a = g.shape().off_diagonal().any(|(u, x, x2)| !(g.alpha(u, x, x2) > 0.0));
            if bad_a || g.beta.iter().any(|&b| !(b > 0.0)) {
                return Err(Error::Hyperparameter("variational shapes and rates must be positive".into()));
            }
        }
        Ok(())
    }

    /// `Σ_{n∈ℵ} KL(q_n ‖ p_n)`; other nodes are held at the posterior.
    fn kl_term(&self, q: &RatePosterior) -> f64 {
        (0..q.num_nodes())
            .filter(|&n| self.aleph[n])
            .map(|n| q.node(n).kl_to(self.prior.node(n), None))
            .sum()
    }

    /// κ-dependent data term for statistics `m`, `t` of node `n`.
    fn data_term(q: &NodeGamma, trans: &[f64], dwell: &[f64]) -> f64 {
        let shape = q.shape();
        shape
            .off_diagonal()
            .map(|(u, x, x2)| {
                let (a, b) = (q.alpha(u, x, x2), q.beta(u, x));
                let em = trans[shape.trans_index(u, x, x2)];
                let et = dwell[shape.dwell_index(u, x)];
                em * (b.ln() - digamma(a)) + et * a / b
            })
            .sum()
    }

    pub fn value(&self, q: &RatePosterior) -> Result<f64> {
        self.check(q)?;
        let mut v = self.kl_term(q) + self.mean_constant;
        for n in (0..q.num_nodes()).filter(|&n| self.aleph[n]) {
            v += Self::data_term(q.node(n), &self.mean_trans[n], &self.mean_dwell[n]);
        }
        Ok(v)
    }

    /// Value of each sample's term; their mean equals [`Self::value`].
    pub fn per_sample(&self, q: &RatePosterior) -> Result<Vec<f64>> {
        self.check(q)?;
        let kl = self.kl_term(q);
        Ok(self
            .samples
            .iter()
            .map(|row| {
                kl + row
                    .iter()
                    .enumerate()
                    .filter_map(|(n, t)| t.as_ref().map(|t| (n, t)))
                    .map(|(n, t)| t.constant + Self::data_term(q.node(n), &t.stats.trans, &t.stats.dwell))
                    .sum::<f64>()
            })
            .collect())
    }

    /// Gradient with respect to the shapes (trans-indexed) and rates
    /// (dwell-indexed) of every node; zero outside ℵ.
    pub fn gradient(&self, q: &RatePosterior) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        self.check(q)?;
        Ok((0..q.num_nodes())
            .map(|n| {
                let g = q.node(n);
                let mut ga = vec![0.0; g.alpha.len()];
                let mut gb = vec![0.0; g.beta.len()];
                if self.aleph[n] {
                    let p = self.prior.node(n);
                    let shape = g.shape();
                    for (u, x, x2) in shape.off_diagonal() {
                        let (ti, di) = (shape.trans_index(u, x, x2), shape.dwell_index(u, x));
                        let (a, b) = (g.alpha[ti], g.beta[di]);
                        let (a0, b0) = (p.alpha[ti], p.beta[di]);
                        let (em, et) = (self.mean_trans[n][ti], self.mean_dwell[n][di]);
                        let psi1 = trigamma(a);
                        ga[ti] = -em * psi1 + et / b + (a - a0) * psi1 - (b - b0) / b;
                        gb[di] += em / b - et * a / (b * b) + a0 / b - b0 * a / (b * b);
                    }
                }
                (ga, gb)
            })
            .collect())
    }

    /// Closed-form minimiser `Gam(ᾱ + mean E[M̂], β̄ + mean E[T̂])` on ℵ.
    pub fn closed_form_minimizer(&self) -> RatePosterior {
        let mut q = self.prior.clone();
        for n in (0..q.num_nodes()).filter(|&n| self.aleph[n]) {
            let node = &mut q.nodes[n];
            let shape = node.shape();
            for (u, x, x2) in shape.off_diagonal() {
                let i = shape.trans_index(u, x, x2);
                node.alpha[i] += self.mean_trans[n][i];
            }
            for (b, t) in node.beta.iter_mut().zip(&self.mean_dwell[n]) {
                *b += t;
            }
        }
        q
    }

    /// BHC: the criterion with `q` fixed to the posterior.
    pub fn bhc(&self) -> Result<CriterionValue> {
        let value = self.value(&self.prior)?;
        Ok(CriterionValue {
            value,
            std_error: 0.0,
            per_sample: self.per_sample(&self.prior)?,
            trace: vec![TraceEntry {
                iter: 0,
                value,
                step: 0.0,
                grad_norm: 0.0,
            }],
        })
    }

    /// Minimises over κ, starting from the posterior.
    ///
    /// Gradient descent in log-parameters, preconditioned by the gamma
    /// Fisher information of each `(n, u, x)` block (shapes of all targets
    /// plus their shared rate), with Armijo backtracking.
    pub fn minimize(&self, config: &OptimizerConfig) -> Result<(RatePosterior, CriterionValue)> {
        let mut q = self.prior.clone();
        let mut value = self.value(&q)?;
        if !value.is_finite() {
            return Err(Error::Optimizer("criterion is not finite at the posterior".into()));
        }
        let mut trace = vec![TraceEntry {
            iter: 0,
            value,
            step: 0.0,
            grad_norm: grad_norm(&self.gradient(&q)?),
        }];
        for iter in 1..=config.max_iters {
            let grad = self.gradient(&q)?;
            let (dir, slope) = self.natural_direction(&q, &grad);
            if !(slope > 0.0) {
                break;
            }
            let mut step = 1.0;
            let mut accepted = None;
            while step >= config.min_step {
                let trial = retract(&q, &dir, step);
                if let Ok(v) = self.value(&trial) {
                    if v.is_finite() && v <= value - config.armijo * step * slope {
                        accepted = Some((trial, v));
                        break;
                    }
                }
                step *= 0.5;
            }
            let Some((trial, v)) = accepted else { break };
            let improvement = rel_improvement(value, v);
            q = trial;
            value = v;
            trace.push(TraceEntry {
                iter,
                value,
                step,
                grad_norm: grad_norm(&self.gradient(&q)?),
            });
            if improvement < config.rel_tol {
                break;
            }
        }
        let per_sample = self.per_sample(&q)?;
        Ok((
            q,
            CriterionValue {
                value,
                std_error: 0.0,
                per_sample,
                trace,
            },
        ))
    }

    /// Log-space natural-gradient direction and its slope `gᵀ F⁻¹ g`.
    fn natural_direction(&self, q: &RatePosterior, grad: &[(Vec<f64>, Vec<f64>)]) -> (Vec<(Vec<f64>, Vec<f64>)>, f64) {
        let mut slope = 0.0;
        let dir = q
            .nodes
            .iter()
            .zip(grad)
            .enumerate()
            .map(|(n, (g, (ga, gb)))| {
                let mut da = vec![0.0; ga.len()];
                let mut db = vec![0.0; gb.len()];
                if !self.aleph[n] {
                    return (da, db);
                }
                let shape = g.shape();
                for u in 0..shape.num_configs {
                    for x in 0..shape.card {
                        let di = shape.dwell_index(u, x);
                        let b = g.beta[di];
                        let gb_log = b * gb[di];
                        // Arrowhead system: diag a²ψ1(a), border −a, corner Σa.
                        let mut schur = 0.0;
                        let mut rhs = gb_log;
                        let targets: Vec<usize> = (0..shape.card).filter(|&x2| x2 != x).collect();
                        for &x2 in &targets {
                            let ti = shape.trans_index(u, x, x2);
                            let a = g.alpha[ti];
                            let d = a * a * trigamma(a);
                            schur += a - a * a / d;
                            rhs += a * (a * ga[ti]) / d;
                        }
                        let d_b = if schur > 0.0 { rhs / schur } else { 0.0 };
                        db[di] = d_b;
                        slope += gb_log * d_b;
                        for &x2 in &targets {
                            let ti = shape.trans_index(u, x, x2);
                            let a = g.alpha[ti];
                            let ga_log = a * ga[ti];
                            let d_a = (ga_log + a * d_b) / (a * a * trigamma(a));
                            da[ti] = d_a;
                            slope += ga_log * d_a;
                        }
                    }
                }
                (da, db)
            })
            .collect();
        (dir, slope)
    }

    /// Monte-Carlo BHC from independent pairs: the average of
    /// [`kl_ctbn_rates`] between each sample and a fresh posterior draw.
    pub fn bhc_pairs(&self, samples: &[Ctbn], alternatives: &[Ctbn]) -> Result<CriterionValue> {
        if samples.len() != self.samples.len() || alternatives.len() != samples.len() {
            return Err(Error::Dimension("one alternative per prepared sample required".into()));
        }
        let per_sample = samples
            .iter()
            .zip(alternatives)
            .zip(&self.samples)
            .map(|((lam, alt), row)| {
                let stats: Vec<NodeStats> = row
                    .iter()
                    .enumerate()
                    .map(|(n, t)| match t {
                        Some(t) => t.stats.clone(),
                        None => NodeStats::zeros(self.prior.node(n).shape()),
                    })
                    .collect();
                kl_ctbn_rates(lam, alt, &stats, &self.aleph)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(super::summarize(per_sample))
    }
}

fn grad_norm(grad: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    grad.iter()
        .flat_map(|(a, b)| a.iter().chain(b))
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// `κ ← κ · exp(−t d)` in every coordinate.
fn retract(q: &RatePosterior, dir: &[(Vec<f64>, Vec<f64>)], step: f64) -> RatePosterior {
    let mut out = q.clone();
    for (g, (da, db)) in out.nodes.iter_mut().zip(dir) {
        let shape = g.shape();
        for (u, x, x2) in shape.off_diagonal() {
            let i = shape.trans_index(u, x, x2);
            g.alpha[i] *= (-step * da[i]).exp();
        }
        for (b, d) in g.beta.iter_mut().zip(db) {
            *b *= (-step * d).exp();
        }
    }
    out
}
