//! Smoothing of paths observed at discrete times through a noisy channel.
//!
//! A backward pass integrates `dρ/dt = −W ρ` from `T` to 0 and multiplies
//! `ρ` by the observation likelihood at each observation time; a forward
//! filter does the same for the master equation. Their normalised product
//! gives the smoothed marginals `p(S(t) | Y)`, which are the solution of the
//! master equation with the tilted rates `W(s, s') ρ(s') / ρ(s)`. Expected
//! dwell times and transition counts follow by quadrature:
//! `E[T(s)|Y] = ∫ p(S(t) = s | Y) dt` and
//! `E[M(s, s')|Y] = ∫ α(s, t) W(s, s') ρ(s', t) / Σ_z α(z, t) ρ(z, t) dt`.

mod observation;

pub use observation::{noisy_categorical, ObservationDocument, ObservationEntry, ObservationSeries};

use crate::bayes::{FamilyTable, RatePosterior};
use crate::engine::{project_node, project_statistics, ExpectedStats, IntegratorConfig, Propagator};
use crate::error::{Error, Result};
use crate::model::{AmalgamatedCtmc, Intervention, JointSpace};
use crate::stats::NodeStats;

/// Smoothing output on the integration grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedMarginals {
    /// Grid times, including every observation time.
    pub grid: Vec<f64>,
    /// `p(S(t_g) = s | Y)` per grid point.
    pub marginals: Vec<Vec<f64>>,
    /// Backward messages `ρ(·, t_g)` (right limits at observation times),
    /// each normalised to sum one.
    pub backward: Vec<Vec<f64>>,
    /// Expected joint statistics given the observations.
    pub stats: ExpectedStats,
    /// `ln p(Y)`.
    pub log_likelihood: f64,
}

/// One interval between consecutive breakpoints.
struct Segment {
    start: f64,
    steps: usize,
    h: f64,
}

fn segments(horizon: f64, times: &[f64], rate: f64, config: &IntegratorConfig) -> Vec<Segment> {
    let mut cuts = vec![0.0];
    cuts.extend(times.iter().copied().filter(|&t| t > 0.0 && t < horizon));
    cuts.push(horizon);
    cuts.windows(2)
        .map(|w| {
            let len = w[1] - w[0];
            let steps = config.steps_for(len, rate);
            Segment {
                start: w[0],
                steps,
                h: len / steps as f64,
            }
        })
        .collect()
}

/// Quadrature weights on `n` uniform intervals of width `h`: composite
/// Simpson, closing with the 3/8 rule when `n` is odd.
fn quadrature_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    if n == 1 {
        w[0] = h / 2.0;
        w[1] = h / 2.0;
        return w;
    }
    let simpson = if n % 2 == 0 { n } else { n - 3 };
    for i in (0..simpson).step_by(2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if simpson < n {
        for (k, c) in [3.0, 9.0, 9.0, 3.0].into_iter().enumerate() {
            w[simpson + k] += c * h / 8.0;
        }
    }
    w
}

fn normalise(v: &mut [f64]) -> f64 {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    s
}

fn apply_likelihood(v: &mut [f64], likelihood: &[f64]) {
    for (x, l) in v.iter_mut().zip(likelihood) {
        *x *= l;
    }
}

/// Backward messages on the grid of [`smoothed_marginals`].
///
/// Returns, per segment, `ρ` at each of its grid points. At a segment's
/// last point the observation at that time is already applied (left
/// limit); at its first point it is not (right limit).
pub fn backward_pass(
    ctmc: &AmalgamatedCtmc,
    observations: &ObservationSeries,
    horizon: f64,
    config: &IntegratorConfig,
) -> Result<Vec<Vec<Vec<f64>>>> {
    observations.check(ctmc.size(), horizon)?;
    let segs = segments(horizon, observations.times(), ctmc.max_exit_rate(), config);
    backward_on(ctmc, observations, horizon, &segs)
}

fn observation_at(observations: &ObservationSeries, t: f64) -> Option<usize> {
    observations.times().iter().position(|&x| x == t)
}

fn backward_on(
    ctmc: &AmalgamatedCtmc,
    observations: &ObservationSeries,
    horizon: f64,
    segs: &[Segment],
) -> Result<Vec<Vec<Vec<f64>>>> {
    let n = ctmc.size();
    let all: Vec<usize> = (0..n).collect();
    let mut rho = vec![1.0 / n as f64; n];
    let mut out: Vec<Vec<Vec<f64>>> = Vec::with_capacity(segs.len());
    for (idx, seg) in segs.iter().enumerate().rev() {
        let end = if idx + 1 == segs.len() { horizon } else { segs[idx + 1].start };
        if let Some(i) = observation_at(observations, end) {
            apply_likelihood(&mut rho, observations.likelihood(i));
            if normalise(&mut rho) == 0.0 {
                return Err(Error::IncompatibleObservation { time: end });
            }
        }
        let prop = Propagator::new(ctmc, &all, seg.h);
        let mut slices = vec![rho.clone()];
        for _ in 0..seg.steps {
            rho = prop.backward(&rho);
            for v in rho.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            if normalise(&mut rho) == 0.0 {
                return Err(Error::IncompatibleObservation { time: end });
            }
            slices.push(rho.clone());
        }
        slices.reverse();
        out.push(slices);
    }
    out.reverse();
    Ok(out)
}

/// Forward–backward smoothing from the initial distribution `initial`
/// over joint states. An observation at time 0 applies to the initial
/// state; one at `horizon` to the final state.
pub fn smoothed_marginals(
    ctmc: &AmalgamatedCtmc,
    initial: &[f64],
    observations: &ObservationSeries,
    horizon: f64,
    config: &IntegratorConfig,
) -> Result<SmoothedMarginals> {
    let n = ctmc.size();
    if initial.len() != n {
        return Err(Error::Dimension(format!("initial distribution has {} entries, expected {n}", initial.len())));
    }
    if initial.iter().any(|&p| !(p >= 0.0)) || (initial.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("initial distribution must be non-negative and sum to one".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    observations.check(n, horizon)?;
    let segs = segments(horizon, observations.times(), ctmc.max_exit_rate(), config);
    let rho = backward_on(ctmc, observations, horizon, &segs)?;
    let all: Vec<usize> = (0..n).collect();

    let mut alpha = initial.to_vec();
    let mut log_likelihood = 0.0;
    if let Some(i) = observation_at(observations, 0.0) {
        apply_likelihood(&mut alpha, observations.likelihood(i));
        let z = normalise(&mut alpha);
        if z == 0.0 {
            return Err(Error::IncompatibleObservation { time: 0.0 });
        }
        log_likelihood += z.ln();
    }

    let mut grid = Vec::new();
    let mut marginals = Vec::new();
    let mut backward = Vec::new();
    let mut dwell = vec![0.0; n];
    let mut trans = vec![0.0; n * n];
    let gen = ctmc.generator();
    for (idx, seg) in segs.iter().enumerate() {
        let prop = Propagator::new(ctmc, &all, seg.h);
        let weights = quadrature_weights(seg.steps, seg.h);
        let end = seg.start + seg.steps as f64 * seg.h;
        for g in 0..=seg.steps {
            if g > 0 {
                alpha = prop.forward_only(&alpha);
                crate::engine::sanitize(&mut alpha)?;
            }
            let r = &rho[idx][g];
            let z: f64 = alpha.iter().zip(r).map(|(a, b)| a * b).sum();
            let t = if g == seg.steps { end } else { seg.start + g as f64 * seg.h };
            if !(z > 0.0) {
                return Err(Error::IncompatibleObservation { time: t });
            }
            let pi: Vec<f64> = alpha.iter().zip(r).map(|(a, b)| a * b / z).collect();
            let w = weights[g];
            for s in 0..n {
                dwell[s] += w * pi[s];
                if alpha[s] == 0.0 {
                    continue;
                }
                let c = w * alpha[s] / z;
                for s2 in (0..n).filter(|&s2| s2 != s) {
                    let rate = gen[s * n + s2];
                    if rate > 0.0 {
                        trans[s * n + s2] += c * rate * r[s2];
                    }
                }
            }
            // Shared breakpoints are reported once, from the segment on
            // their right (or the last segment's end).
            if g < seg.steps || idx + 1 == segs.len() {
                grid.push(t);
                marginals.push(pi);
                backward.push(r.clone());
            }
        }
        if idx + 1 < segs.len() {
            if let Some(i) = observation_at(observations, segs[idx + 1].start) {
                apply_likelihood(&mut alpha, observations.likelihood(i));
                let z = normalise(&mut alpha);
                if z == 0.0 {
                    return Err(Error::IncompatibleObservation { time: segs[idx + 1].start });
                }
                log_likelihood += z.ln();
            }
        } else if let Some(i) = observation_at(observations, horizon).filter(|_| horizon > 0.0) {
            let z: f64 = alpha.iter().zip(observations.likelihood(i)).map(|(a, l)| a * l).sum();
            if z == 0.0 {
                return Err(Error::IncompatibleObservation { time: horizon });
            }
            log_likelihood += z.ln();
        }
    }
    Ok(SmoothedMarginals {
        grid,
        marginals,
        backward,
        stats: ExpectedStats {
            horizon,
            joint_dwell: dwell,
            joint_trans: trans,
        },
        log_likelihood,
    })
}

impl SmoothedMarginals {
    /// Tilted generator `Ŵ(s, s') = W(s, s') ρ(s') / ρ(s)` at grid point
    /// `g`, diagonal set so rows sum to zero. Rows of states with
    /// `ρ(s) = 0` (impossible given later observations) are zero.
    pub fn tilted_generator(&self, ctmc: &AmalgamatedCtmc, g: usize) -> Vec<f64> {
        let n = ctmc.size();
        let rho = &self.backward[g];
        let mut out = vec![0.0; n * n];
        for s in 0..n {
            if rho[s] <= 0.0 {
                continue;
            }
            let mut total = 0.0;
            for s2 in (0..n).filter(|&s2| s2 != s) {
                let v = ctmc.rate(s, s2) * rho[s2] / rho[s];
                out[s * n + s2] = v;
                total += v;
            }
            out[s * n + s] = -total;
        }
        out
    }

    /// Node statistics under the parent sets of `graph`.
    pub fn node_statistics(&self, space: &JointSpace, graph: &crate::model::Graph) -> Result<Vec<NodeStats>> {
        project_statistics(&self.stats, space, graph)
    }
}

/// Conjugate update of `posterior` with smoothed expected statistics in
/// place of observed counts; intervened nodes are left untouched.
pub fn incomplete_data_posterior_update(
    posterior: &RatePosterior,
    smoothed: &SmoothedMarginals,
    space: &JointSpace,
    intervention: &Intervention,
) -> Result<RatePosterior> {
    let stats = smoothed.node_statistics(space, &posterior.graph)?;
    let mut out = posterior.clone();
    for (n, st) in stats.iter().enumerate() {
        if intervention.condition(n).is_none() {
            out.add_to_node(n, st)?;
        }
    }
    Ok(out)
}

/// Adds smoothed expected statistics to every family of unintervened
/// nodes, so structure scores use them in place of observed counts.
pub fn add_smoothed_to_table(
    table: &mut FamilyTable,
    smoothed: &SmoothedMarginals,
    space: &JointSpace,
    intervention: &Intervention,
) -> Result<()> {
    for n in 0..table.num_nodes() {
        if !intervention.condition(n).is_none() {
            continue;
        }
        for i in 0..table.candidates(n).len() {
            let ps = table.candidates(n)[i];
            let st = project_node(&smoothed.stats, space, n, ps);
            table.add_expected(n, i, &st)?;
        }
    }
    Ok(())
}
