//! Master-equation solutions and expected sufficient statistics.
//!
//! The forward equation `dp/dt = p W` is integrated with classical RK4 on
//! a uniform grid. For a linear system one RK4 step is the matrix
//! `R = I + A + A²/2 + A³/6 + A⁴/24` with `A = hW`, and the occupation
//! integral over the same step is `p · h(I + A/2 + A²/6 + A³/24)`, the
//! exact integral of the RK4 polynomial. Only states reachable from the
//! initial support are propagated; the rest have probability zero.

mod project;
mod propagator;

pub use project::{expected_statistics_under_posterior_sample, project_node, project_statistics};
pub use propagator::Propagator;

use crate::error::{Error, Result};
use crate::model::AmalgamatedCtmc;
use serde::{Deserialize, Serialize};

/// Largest negative probability silently clamped to zero.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;
/// Largest tolerated deviation of a slice sum from one.
pub const DRIFT_TOLERANCE: f64 = 1e-6;

/// Step-size policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    /// Fixed step count; `None` picks `steps_per_unit · T · max|W(s,s)|`.
    pub steps: Option<usize>,
    pub steps_per_unit: f64,
    pub min_steps: usize,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            steps: None,
            steps_per_unit: 200.0,
            min_steps: 2,
            max_steps: 100_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_steps(steps: usize) -> Self {
        IntegratorConfig {
            steps: Some(steps),
            ..Default::default()
        }
    }

    pub fn steps_for(&self, horizon: f64, max_exit_rate: f64) -> usize {
        if let Some(k) = self.steps {
            return k.max(1);
        }
        let raw = (self.steps_per_unit * horizon * max_exit_rate).ceil();
        let raw = if raw.is_finite() { raw as usize } else { self.max_steps };
        raw.clamp(self.min_steps, self.max_steps)
    }
}

/// Transient distribution on a uniform grid plus its occupation integral.
#[derive(Clone, Debug, PartialEq)]
pub struct TransientSolution {
    grid: Vec<f64>,
    probs: Vec<Vec<f64>>,
    dwell: Vec<f64>,
}

impl TransientSolution {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        &self.probs[k]
    }

    pub fn last(&self) -> &[f64] {
        self.probs.last().expect("solution has at least two slices")
    }

    pub fn horizon(&self) -> f64 {
        *self.grid.last().expect("solution has at least two slices")
    }

    /// `∫₀ᵀ p_t(s) dt` per joint state.
    pub fn dwell(&self) -> &[f64] {
        &self.dwell
    }

    /// Linear interpolation of the distribution at time `t`.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let h = self.grid[1] - self.grid[0];
        let k = ((t / h).floor() as usize).min(self.grid.len() - 2);
        let w = ((t - self.grid[k]) / h).clamp(0.0, 1.0);
        self.probs[k]
            .iter()
            .zip(&self.probs[k + 1])
            .map(|(a, b)| (1.0 - w) * a + w * b)
            .collect()
    }
}

/// Expected joint dwell times and transition counts over `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedStats {
    pub horizon: f64,
    /// `E[T(s)]`.
    pub joint_dwell: Vec<f64>,
    /// `E[M(s, s')]`, dense row-major with zero diagonal.
    pub joint_trans: Vec<f64>,
}

impl ExpectedStats {
    pub fn size(&self) -> usize {
        self.joint_dwell.len()
    }

    #[inline]
    pub fn trans(&self, s: usize, s2: usize) -> f64 {
        self.joint_trans[s * self.size() + s2]
    }

    /// Builds the joint statistics of a chain from its dwell times,
    /// `E[M(s, s')] = W(s, s') E[T(s)]`.
    pub fn from_dwell(ctmc: &AmalgamatedCtmc, horizon: f64, joint_dwell: Vec<f64>) -> Self {
        let n = ctmc.size();
        let mut joint_trans = vec![0.0; n * n];
        for s in 0..n {
            if joint_dwell[s] == 0.0 {
                continue;
            }
            for s2 in 0..n {
                if s2 != s {
                    joint_trans[s * n + s2] = ctmc.rate(s, s2) * joint_dwell[s];
                }
            }
        }
        ExpectedStats {
            horizon,
            joint_dwell,
            joint_trans,
        }
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    Ok(())
}

fn check_generator(ctmc: &AmalgamatedCtmc) -> Result<()> {
    let n = ctmc.size();
    for (i, v) in ctmc.generator().iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteGenerator { row: i / n, col: i % n });
        }
    }
    Ok(())
}

/// Clamps tiny negatives and checks normalisation of one slice.
pub(crate) fn sanitize(p: &mut [f64]) -> Result<()> {
    let mut sum = 0.0;
    for v in p.iter_mut() {
        if *v < 0.0 {
            if *v < -NEGATIVE_TOLERANCE {
                return Err(Error::NormalizationDrift { drift: *v });
            }
            *v = 0.0;
        }
        sum += *v;
    }
    if (sum - 1.0).abs() > DRIFT_TOLERANCE {
        return Err(Error::NormalizationDrift { drift: sum - 1.0 });
    }
    Ok(())
}

/// Integrates the master equation from the point mass at `s0` over
/// `steps` uniform RK4 steps, keeping every slice.
pub fn solve_master_equation(ctmc: &AmalgamatedCtmc, s0: usize, horizon: f64, steps: usize) -> Result<TransientSolution> {
    check_horizon(horizon)?;
    check_generator(ctmc)?;
    if steps < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 steps, got {steps}")));
    }
    if s0 >= ctmc.size() {
        return Err(Error::Dimension(format!("initial state {s0} outside 0..{}", ctmc.size())));
    }
    let h = horizon / steps as f64;
    let prop = Propagator::new(ctmc, &ctmc.reachable_from(s0), h);
    let support = prop.support().to_vec();
    let local0 = support.binary_search(&s0).expect("start is in its own reachable set");
    let mut p = vec![0.0; support.len()];
    p[local0] = 1.0;
    let mut dwell = vec![0.0; support.len()];
    let mut probs = Vec::with_capacity(steps + 1);
    probs.push(prop.expand(&p, ctmc.size()));
    for _ in 0..steps {
        p = prop.forward(&p, &mut dwell);
        sanitize(&mut p)?;
        probs.push(prop.expand(&p, ctmc.size()));
    }
    let grid = (0..=steps).map(|k| k as f64 * h).collect();
    Ok(TransientSolution {
        grid,
        probs,
        dwell: prop.expand(&dwell, ctmc.size()),
    })
}

/// Solves with the step count chosen by `config`.
pub fn solve_with_config(
    ctmc: &AmalgamatedCtmc,
    s0: usize,
    horizon: f64,
    config: &IntegratorConfig,
) -> Result<TransientSolution> {
    let steps = config.steps_for(horizon, ctmc.max_exit_rate());
    solve_master_equation(ctmc, s0, horizon, steps)
}

/// Joint expected statistics of a stored solution.
pub fn expected_statistics(solution: &TransientSolution, ctmc: &AmalgamatedCtmc) -> ExpectedStats {
    ExpectedStats::from_dwell(ctmc, solution.horizon(), solution.dwell().to_vec())
}

/// Expected statistics without storing the trajectory of distributions.
///
/// Uses the same RK4 step but with the step count rounded up to a power
/// of two, so that `K` steps compose by repeated squaring of the pair
/// `(R^m, Σ_{j<m} R^j hS)`. Agrees with [`solve_master_equation`] at the
/// same step count up to rounding.
pub fn endpoint_statistics(
    ctmc: &AmalgamatedCtmc,
    s0: usize,
    horizon: f64,
    config: &IntegratorConfig,
) -> Result<ExpectedStats> {
    let (dwell, _) = endpoint(ctmc, s0, horizon, config)?;
    Ok(ExpectedStats::from_dwell(ctmc, horizon, dwell))
}

/// Final distribution and dwell times via repeated squaring.
pub fn endpoint(
    ctmc: &AmalgamatedCtmc,
    s0: usize,
    horizon: f64,
    config: &IntegratorConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_horizon(horizon)?;
    check_generator(ctmc)?;
    if s0 >= ctmc.size() {
        return Err(Error::Dimension(format!("initial state {s0} outside 0..{}", ctmc.size())));
    }
    let support = ctmc.reachable_from(s0);
    let n = ctmc.size();
    if support.len() == 1 {
        let mut p = vec![0.0; n];
        let mut d = vec![0.0; n];
        p[s0] = 1.0;
        d[s0] = horizon;
        return Ok((d, p));
    }
    let steps = config.steps_for(horizon, ctmc.max_exit_rate()).next_power_of_two().max(2);
    let h = horizon / steps as f64;
    let prop = Propagator::new(ctmc, &support, h);
    let (pk, dk) = prop.power_of_two(steps);
    let k = support.len();
    let local0 = support.binary_search(&s0).expect("start is in its own reachable set");
    let mut p: Vec<f64> = pk[local0 * k..(local0 + 1) * k].to_vec();
    let d: Vec<f64> = dk[local0 * k..(local0 + 1) * k].iter().map(|v| v.max(0.0)).collect();
    sanitize(&mut p)?;
    Ok((prop.expand(&d, n), prop.expand(&p, n)))
}
