use super::structure::StructureSamples;
use super::summarize;
use super::optim::CriterionValue;
use crate::bayes::{structure_marginal_log_likelihood, FamilyTable, GammaPrior, RatePosterior, StructurePosterior};
use crate::error::{Error, Result};
use crate::model::{Ctbn, Intervention};
use crate::rng::stream;
use crate::sim::{extract_node_statistics, extract_statistics, sample_path};
use crate::special::log_sum_exp;

/// Nested Monte-Carlo expected information gain about the rates.
///
/// For each posterior draw `Λ̂_k` and `num_paths` paths simulated from it,
/// accumulates `ln p(Λ̂_k | H, Ŝ) − ln p(Λ̂_k | H)` over unintervened
/// nodes. Paths of draw `k` use the stream `(seed, k, j)`. The standard
/// error is taken over the per-draw means.
pub fn eig_parameters(
    posterior: &RatePosterior,
    samples: &[Ctbn],
    intervention: &Intervention,
    s0: &[usize],
    horizon: f64,
    num_paths: usize,
    seed: u64,
) -> Result<CriterionValue> {
    if samples.is_empty() || num_paths == 0 {
        return Err(Error::InvalidArgument("need at least one sample and one path".into()));
    }
    let aleph = intervention.unintervened();
    let mut start = s0.to_vec();
    intervention.force_initial(&mut start);
    let per_sample = samples
        .iter()
        .enumerate()
        .map(|(k, model)| {
            let before: Vec<f64> = (0..model.num_nodes())
                .map(|n| posterior.node(n).log_density(model.node(n)))
                .collect();
            let mut total = 0.0;
            for j in 0..num_paths {
                let mut rng = stream(seed, &[k as u64, j as u64]);
                let path = sample_path(model, intervention, &start, horizon, &mut rng)?;
                let stats = extract_statistics(&path, model.cards(), &posterior.graph)?;
                let updated = posterior.update(&stats)?;
                total += (0..model.num_nodes())
                    .filter(|&n| aleph[n])
                    .map(|n| updated.node(n).log_density(model.node(n)) - before[n])
                    .sum::<f64>();
            }
            Ok(total / num_paths as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(per_sample))
}

/// Nested Monte-Carlo expected information gain about the parent sets.
///
/// For every unintervened node `n`, support parent set `i` (weighted by its
/// posterior probability) and draw `k` with that parent set, one path is
/// simulated and `ln p(par_i | H, Ŝ) − ln p(par_i | H)` accumulated. The
/// standard error is taken over draws.
#[allow(clippy::too_many_arguments)]
pub fn eig_structure(
    samples: &StructureSamples,
    table: &FamilyTable,
    posterior: &StructurePosterior,
    prior: GammaPrior,
    intervention: &Intervention,
    s0: &[usize],
    horizon: f64,
    seed: u64,
) -> Result<CriterionValue> {
    let support = &samples.support;
    let aleph = intervention.unintervened();
    let num_samples = samples.models.iter().flatten().map(Vec::len).next().unwrap_or(0);
    if num_samples == 0 {
        return Err(Error::InvalidArgument("at least one structure sample is required".into()));
    }
    let mut start = s0.to_vec();
    intervention.force_initial(&mut start);
    let cards = table.cards();
    let mut per_sample = vec![0.0; num_samples];
    for n in (0..aleph.len()).filter(|&n| aleph[n]) {
        let candidates = table.candidates(n);
        let base: Vec<f64> = (0..candidates.len())
            .map(|c| structure_marginal_log_likelihood(table.stats(n, c), prior))
            .collect::<Result<_>>()?;
        let old: Vec<f64> = candidates.iter().map(|&c| posterior.prob(n, c).ln()).collect();
        for (i, &par) in support.parents[n].iter().enumerate() {
            let target = table.index_of(n, par).expect("support parent sets come from the table");
            for (k, model) in samples.models[n][i].iter().enumerate() {
                let mut rng = stream(seed, &[n as u64, par.bits() as u64, k as u64]);
                let path = sample_path(model, intervention, &start, horizon, &mut rng)?;
                let mut scores = Vec::with_capacity(candidates.len());
                for (c, &ps) in candidates.iter().enumerate() {
                    if old[c] == f64::NEG_INFINITY {
                        scores.push(f64::NEG_INFINITY);
                        continue;
                    }
                    let mut st = extract_node_statistics(&path, cards, n, ps)?;
                    st.accumulate(table.stats(n, c))?;
                    scores.push(old[c] + structure_marginal_log_likelihood(&st, prior)? - base[c]);
                }
                let z = log_sum_exp(&scores);
                per_sample[k] += support.probs[n][i] * (scores[target] - z - old[target]);
            }
        }
    }
    Ok(summarize(per_sample))
}
