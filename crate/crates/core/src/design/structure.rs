use super::kl::expected_log_evidence;
use super::optim::{rel_improvement, CriterionValue, OptimizerConfig, TraceEntry};
use super::solve_joint;
use crate::bayes::{FamilyTable, GammaPrior, NodeGamma, StructurePosterior};
use crate::engine::{project_node, IntegratorConfig};
use crate::error::{Error, Result};
use crate::model::{Ctbn, Graph, Intervention, ParentSet};
use crate::rng::stream;
use crate::special::log_sum_exp;

/// Parent sets kept per node, with their renormalised posterior weights
/// and the rate posterior each implies given the history.
#[derive(Clone, Debug)]
pub struct StructureSupport {
    pub parents: Vec<Vec<ParentSet>>,
    pub probs: Vec<Vec<f64>>,
    pub rate_posteriors: Vec<Vec<NodeGamma>>,
}

impl StructureSupport {
    /// Keeps parent sets whose posterior probability is at least
    /// `threshold`; the kept weights are renormalised.
    pub fn new(posterior: &StructurePosterior, table: &FamilyTable, prior: GammaPrior, threshold: f64) -> Result<Self> {
        if posterior.num_nodes() != table.num_nodes() {
            return Err(Error::Dimension("structure posterior and family table disagree".into()));
        }
        let mut parents = Vec::new();
        let mut probs = Vec::new();
        let mut rate_posteriors = Vec::new();
        for n in 0..posterior.num_nodes() {
            let best = posterior.node(n).iter().map(|s| s.log_prob).fold(f64::NEG_INFINITY, f64::max);
            let kept: Vec<_> = posterior
                .node(n)
                .iter()
                .filter(|s| s.log_prob.exp() >= threshold || s.log_prob == best)
                .collect();
            let total: f64 = kept.iter().map(|s| s.log_prob.exp()).sum();
            let mut ps = Vec::new();
            let mut gs = Vec::new();
            for s in &kept {
                let idx = table
                    .index_of(n, s.parents)
                    .ok_or_else(|| Error::InvalidArgument(format!("parent set {:?} of node {n} not in the family table", s.parents.to_vec())))?;
                ps.push(s.parents);
                gs.push(table.rate_posterior(n, idx, prior)?);
            }
            probs.push(kept.iter().map(|s| s.log_prob.exp() / total).collect());
            parents.push(ps);
            rate_posteriors.push(gs);
        }
        Ok(StructureSupport {
            parents,
            probs,
            rate_posteriors,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.parents.len()
    }

    pub fn len(&self, n: usize) -> usize {
        self.parents[n].len()
    }
}

/// Posterior draws `(Ĝ, Λ̂)` with node `n`'s parent set fixed to each
/// support member in turn: `models[n][i][k]`.
#[derive(Clone, Debug)]
pub struct StructureSamples {
    pub support: StructureSupport,
    pub models: Vec<Vec<Vec<Ctbn>>>,
}

/// Draws `count` models per (node, parent set).
///
/// The other nodes' parent sets come from the structure posterior and
/// every node's rates from the gamma posterior implied by its drawn parent
/// set; each node of each draw uses its own stream.
pub fn draw_structure_samples(
    posterior: &StructurePosterior,
    table: &FamilyTable,
    prior: GammaPrior,
    support: StructureSupport,
    count: usize,
    seed: u64,
) -> Result<StructureSamples> {
    let nn = posterior.num_nodes();
    let cards = table.cards().to_vec();
    let mut models = Vec::with_capacity(nn);
    for n in 0..nn {
        let mut per_set = Vec::with_capacity(support.len(n));
        for &par in &support.parents[n] {
            let mut draws = Vec::with_capacity(count);
            for k in 0..count {
                let path = |m: usize, purpose: u64| [n as u64, par.bits() as u64, k as u64, m as u64, purpose];
                let sets: Vec<ParentSet> = (0..nn)
                    .map(|m| {
                        if m == n {
                            par
                        } else {
                            posterior.sample_parents(m, &mut stream(seed, &path(m, 0)))
                        }
                    })
                    .collect();
                let graph = Graph::from_parent_sets(sets.clone())?;
                let nodes = (0..nn)
                    .map(|m| {
                        let idx = table
                            .index_of(m, sets[m])
                            .ok_or_else(|| Error::InvalidArgument("sampled parent set outside the candidates".into()))?;
                        Ok(table.rate_posterior(m, idx, prior)?.sample(&mut stream(seed, &path(m, 1))))
                    })
                    .collect::<Result<Vec<_>>>()?;
                draws.push(Ctbn::new(cards.clone(), graph, nodes)?);
            }
            per_set.push(draws);
        }
        models.push(per_set);
    }
    Ok(StructureSamples { support, models })
}

/// The structure VBHC criterion for one candidate intervention.
///
/// With `B_k[i][j]` the first-order marginal KL between parent sets `i`
/// and `j` of node `n` for draw `k` (drawn with parent set `i`),
/// `V(q) = Σ_{n∈ℵ} Σ_i Σ_j p_i q_j mean_k B_k[i][j] + Σ_n KL(q_n ‖ p_n)`.
#[derive(Clone, Debug)]
pub struct StructureCriterion {
    probs: Vec<Vec<f64>>,
    aleph: Vec<bool>,
    /// `kl[n][k][i][j]`; empty for nodes outside ℵ.
    kl: Vec<Vec<Vec<Vec<f64>>>>,
    num_samples: usize,
}

impl StructureCriterion {
    pub fn prepare(
        samples: &StructureSamples,
        intervention: &Intervention,
        s0: &[usize],
        horizon: f64,
        integrator: &IntegratorConfig,
    ) -> Result<Self> {
        let support = &samples.support;
        let aleph = intervention.unintervened();
        if aleph.len() != support.num_nodes() {
            return Err(Error::Dimension("intervention and support disagree".into()));
        }
        let num_samples = samples.models.iter().flatten().map(Vec::len).next().unwrap_or(0);
        if num_samples == 0 {
            return Err(Error::InvalidArgument("at least one structure sample is required".into()));
        }
        let mut kl = Vec::with_capacity(aleph.len());
        for n in 0..aleph.len() {
            if !aleph[n] {
                kl.push(Vec::new());
                continue;
            }
            let m = support.len(n);
            let mut per_k = vec![vec![vec![0.0; m]; m]; num_samples];
            for i in 0..m {
                for (k, model) in samples.models[n][i].iter().enumerate() {
                    let (joint, space) = solve_joint(model, intervention, s0, horizon, integrator)?;
                    let evidence = (0..m)
                        .map(|j| {
                            let st = project_node(&joint, &space, n, support.parents[n][j]);
                            expected_log_evidence(&st, &support.rate_posteriors[n][j])
                        })
                        .collect::<Result<Vec<_>>>()?;
                    for j in 0..m {
                        per_k[k][i][j] = evidence[i] - evidence[j];
                    }
                }
            }
            kl.push(per_k);
        }
        Ok(StructureCriterion {
            probs: support.probs.clone(),
            aleph,
            kl,
            num_samples,
        })
    }

    /// Builds the criterion from given per-sample matrices `kl[n][k][i][j]`.
    pub fn from_matrices(probs: Vec<Vec<f64>>, aleph: Vec<bool>, kl: Vec<Vec<Vec<Vec<f64>>>>) -> Result<Self> {
        let num_samples = kl.iter().map(Vec::len).find(|&l| l > 0).unwrap_or(0);
        if probs.len() != aleph.len() || kl.len() != aleph.len() || num_samples == 0 {
            return Err(Error::Dimension("one weight vector and matrix set per node required".into()));
        }
        for (n, per_k) in kl.iter().enumerate() {
            let m = probs[n].len();
            let ok = if aleph[n] {
                per_k.len() == num_samples && per_k.iter().all(|b| b.len() == m && b.iter().all(|r| r.len() == m))
            } else {
                per_k.is_empty()
            };
            if !ok {
                return Err(Error::Dimension(format!("node {n}: matrix shape mismatch")));
            }
        }
        Ok(StructureCriterion {
            probs,
            aleph,
            kl,
            num_samples,
        })
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    /// `A_n(j) = Σ_i p_i mean_k B_k[i][j]`.
    pub fn linear_coefficients(&self, n: usize) -> Vec<f64> {
        let m = self.probs[n].len();
        if !self.aleph[n] {
            return vec![0.0; m];
        }
        let w = 1.0 / self.num_samples as f64;
        let mut a = vec![0.0; m];
        for b in &self.kl[n] {
            for (i, row) in b.iter().enumerate() {
                for (aj, bij) in a.iter_mut().zip(row) {
                    *aj += w * self.probs[n][i] * bij;
                }
            }
        }
        a
    }

    fn check(&self, q: &[Vec<f64>]) -> Result<()> {
        if q.len() != self.probs.len() || q.iter().zip(&self.probs).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::Dimension("variational weights do not match the support".into()));
        }
        if q.iter().flatten().any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidArgument("variational weights must be non-negative".into()));
        }
        Ok(())
    }

    fn kl_term(&self, q: &[Vec<f64>]) -> f64 {
        q.iter()
            .zip(&self.probs)
            .flat_map(|(qn, pn)| qn.iter().zip(pn))
            .filter(|(&qi, _)| qi > 0.0)
            .map(|(&qi, &pi)| qi * (qi.ln() - pi.ln()))
            .sum()
    }

    pub fn value(&self, q: &[Vec<f64>]) -> Result<f64> {
        self.check(q)?;
        let mut v = self.kl_term(q);
        for (n, qn) in q.iter().enumerate() {
            v += self.linear_coefficients(n).iter().zip(qn).map(|(a, b)| a * b).sum::<f64>();
        }
        Ok(v)
    }

    /// Value of each draw's term; their mean equals [`Self::value`].
    pub fn per_sample(&self, q: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check(q)?;
        let kl = self.kl_term(q);
        Ok((0..self.num_samples)
            .map(|k| {
                kl + (0..q.len())
                    .filter(|&n| self.aleph[n])
                    .map(|n| {
                        let b = &self.kl[n][k];
                        let mut s = 0.0;
                        for (i, row) in b.iter().enumerate() {
                            for (j, bij) in row.iter().enumerate() {
                                s += self.probs[n][i] * q[n][j] * bij;
                            }
                        }
                        s
                    })
                    .sum::<f64>()
            })
            .collect())
    }

    /// `∂V/∂q_n(j) = A_n(j) + 1 + ln q_n(j) − ln p_n(j)`.
    pub fn gradient(&self, q: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.check(q)?;
        Ok(q.iter()
            .enumerate()
            .map(|(n, qn)| {
                self.linear_coefficients(n)
                    .iter()
                    .zip(qn)
                    .zip(&self.probs[n])
                    .map(|((a, qi), pi)| a + 1.0 + qi.ln() - pi.ln())
                    .collect()
            })
            .collect())
    }

    /// `q_n ∝ p_n exp(−A_n)` and its value `−Σ_n ln Σ_j p_j exp(−A_n(j))`.
    pub fn closed_form_minimizer(&self) -> (Vec<Vec<f64>>, f64) {
        let mut value = 0.0;
        let q = (0..self.probs.len())
            .map(|n| {
                let logits: Vec<f64> = self
                    .linear_coefficients(n)
                    .iter()
                    .zip(&self.probs[n])
                    .map(|(a, p)| p.ln() - a)
                    .collect();
                let z = log_sum_exp(&logits);
                value -= z;
                logits.iter().map(|l| (l - z).exp()).collect()
            })
            .collect();
        (q, value)
    }

    /// BHC: the criterion at `q = p`.
    pub fn bhc(&self) -> Result<CriterionValue> {
        let value = self.value(&self.probs)?;
        Ok(CriterionValue {
            value,
            std_error: 0.0,
            per_sample: self.per_sample(&self.probs)?,
            trace: vec![TraceEntry {
                iter: 0,
                value,
                step: 0.0,
                grad_norm: 0.0,
            }],
        })
    }

    /// Projected gradient descent on each node's simplex, starting at `p`.
    ///
    /// Weights are kept at or above `FLOOR` so the entropy gradient stays
    /// finite; nodes outside ℵ stay at `p`, their optimum.
    pub fn minimize(&self, config: &OptimizerConfig) -> Result<(Vec<Vec<f64>>, CriterionValue)> {
        const FLOOR: f64 = 1e-12;
        let mut q = self.probs.clone();
        let mut value = self.value(&q)?;
        let projected_norm = |q: &[Vec<f64>], grad: &[Vec<f64>]| -> f64 {
            q.iter()
                .zip(grad)
                .enumerate()
                .filter(|(n, _)| self.aleph[*n])
                .map(|(_, (qn, gn))| {
                    let p = project_simplex_floor(&qn.iter().zip(gn).map(|(a, g)| a - g).collect::<Vec<_>>(), FLOOR);
                    p.iter().zip(qn).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                })
                .sum::<f64>()
                .sqrt()
        };
        let mut grad = self.gradient(&q)?;
        let mut trace = vec![TraceEntry {
            iter: 0,
            value,
            step: 0.0,
            grad_norm: projected_norm(&q, &grad),
        }];
        let mut step: f64 = 1.0;
        for iter in 1..=config.max_iters {
            let mut accepted = None;
            let mut t = (step * 2.0).min(1e6);
            while t >= config.min_step {
                let trial: Vec<Vec<f64>> = q
                    .iter()
                    .zip(&grad)
                    .enumerate()
                    .map(|(n, (qn, gn))| {
                        if !self.aleph[n] || qn.len() < 2 {
                            return qn.clone();
                        }
                        let y: Vec<f64> = qn.iter().zip(gn).map(|(a, g)| a - t * g).collect();
                        project_simplex_floor(&y, FLOOR)
                    })
                    .collect();
                let decrease: f64 = trial
                    .iter()
                    .zip(&q)
                    .zip(&grad)
                    .flat_map(|((a, b), g)| a.iter().zip(b).zip(g).map(|((a, b), g)| g * (a - b)))
                    .sum();
                if decrease < 0.0 {
                    let v = self.value(&trial)?;
                    if v.is_finite() && v <= value + config.armijo * decrease {
                        accepted = Some((trial, v));
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some((trial, v)) = accepted else { break };
            let improvement = rel_improvement(value, v);
            q = trial;
            value = v;
            step = t;
            grad = self.gradient(&q)?;
            trace.push(TraceEntry {
                iter,
                value,
                step,
                grad_norm: projected_norm(&q, &grad),
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
}

/// Euclidean projection onto `{q : q_i ≥ floor, Σ q_i = 1}`.
pub fn project_simplex_floor(y: &[f64], floor: f64) -> Vec<f64> {
    let n = y.len();
    let mass = 1.0 - floor * n as f64;
    assert!(mass > 0.0, "floor too large for the simplex dimension");
    let shifted: Vec<f64> = y.iter().map(|v| v - floor).collect();
    let mut sorted = shifted.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (i, v) in sorted.iter().enumerate() {
        cumulative += v;
        let t = (cumulative - mass) / (i + 1) as f64;
        if v - t > 0.0 {
            tau = t;
        }
    }
    shifted.iter().map(|v| (v - tau).max(0.0) + floor).collect()
}
