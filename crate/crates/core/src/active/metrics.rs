use crate::bayes::RatePosterior;
use crate::error::{Error, Result};
use crate::model::Ctbn;

/// Posterior mean-squared error `E[(Λ − Λ*)²]` averaged over every
/// off-diagonal rate cell, in closed form `α/β² + (α/β − Λ*)²`.
pub fn mse_posterior(posterior: &RatePosterior, truth: &Ctbn) -> Result<f64> {
    if posterior.graph != *truth.graph() || posterior.cards != truth.cards() {
        return Err(Error::Dimension("posterior and truth differ in graph or cardinalities".into()));
    }
    let mut total = 0.0;
    let mut cells = 0usize;
    for (g, r) in posterior.nodes.iter().zip(truth.nodes()) {
        for (u, x, x2) in g.shape().off_diagonal() {
            let (a, b) = (g.alpha(u, x, x2), g.beta(u, x));
            let mean = a / b;
            total += a / (b * b) + (mean - r.rate(u, x, x2)).powi(2);
            cells += 1;
        }
    }
    Ok(if cells == 0 { 0.0 } else { total / cells as f64 })
}

/// Area under the ROC curve (ties count one half, equivalent to trapezoidal
/// interpolation) and average precision.
pub fn ranking_metrics(scores: &[f64], labels: &[bool]) -> Result<(f64, f64)> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension("one label per score required".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("scores must not be NaN".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateTruth(format!(
            "{positives} positive and {negatives} negative labels; both classes are required"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    // Walk tied groups from the highest score down.
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auroc = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut gp, mut gn) = (0usize, 0usize);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                gp += 1;
            } else {
                gn += 1;
            }
            i += 1;
        }
        // Positives in this group beat negatives below it and tie with
        // negatives inside it.
        auroc += gp as f64 * (negatives - fp - gn) as f64 + 0.5 * (gp * gn) as f64;
        tp += gp;
        fp += gn;
        if gp > 0 {
            ap += gp as f64 / positives as f64 * tp as f64 / (tp + fp) as f64;
        }
    }
    Ok((auroc / (positives * negatives) as f64, ap))
}

/// [`ranking_metrics`] over the off-diagonal entries of an edge-score
/// matrix `scores[from][to]` against a true adjacency matrix.
pub fn auroc_aupr(scores: &[Vec<f64>], truth: &[Vec<bool>]) -> Result<(f64, f64)> {
    let n = truth.len();
    if scores.len() != n || scores.iter().any(|r| r.len() != n) || truth.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension("edge scores and truth must be square and equal in size".into()));
    }
    let mut s = Vec::with_capacity(n * n);
    let mut l = Vec::with_capacity(n * n);
    for from in 0..n {
        for to in (0..n).filter(|&to| to != from) {
            s.push(scores[from][to]);
            l.push(truth[from][to]);
        }
    }
    ranking_metrics(&s, &l)
}

/// Sample variance with the `n − 1` denominator (0 for one value).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Linear-interpolation quantile of sorted data (the common "type 7").
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// One-sided paired t-test of `mean(a − b) > 0`; returns `(t, p)`.
///
/// With all differences equal the statistic is ±∞ (or 0 when they vanish)
/// and the p-value 0, 1 or 0.5 accordingly.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidArgument("paired test needs two equal-length samples of size ≥ 2".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let se = (variance(&d) / n).sqrt();
    if se == 0.0 {
        return Ok(match mean.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => (f64::INFINITY, 0.0),
            Some(std::cmp::Ordering::Less) => (f64::NEG_INFINITY, 1.0),
            _ => (0.0, 0.5),
        });
    }
    let t = mean / se;
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("valid degrees of freedom");
    Ok((t, 1.0 - dist.cdf(t)))
}
