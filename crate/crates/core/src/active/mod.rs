//! Closed-loop simulated experiments.
//!
//! Each step draws an initial state, lets a design strategy pick an
//! intervention (seeing the state), simulates one trajectory from the
//! intervened ground truth, pools its statistics into the posterior and
//! records metrics. Step 0 records the prior.

mod metrics;

pub use metrics::{auroc_aupr, mse_posterior, paired_t_test, quantile, ranking_metrics, variance};

use crate::bayes::{
    edge_marginals, posterior_entropy, structure_posterior_from_table, FamilyTable, GammaPrior, RatePosterior,
    StructurePosterior,
};
use crate::design::{select_intervention, Belief, DesignConfig, OptimizerConfig, Strategy, Target};
use crate::engine::IntegratorConfig;
use crate::error::{Error, Result};
use crate::model::{clamp_candidates, Ctbn, Intervention};
use crate::par::{self, Exec};
use crate::rng::{stream, stream_key};
use crate::sim::{extract_statistics, sample_path, Trajectory};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

/// Stream purposes within one (repetition, step).
const INITIAL_STATE: u64 = 0;
const TRUTH_PATH: u64 = 1;
const DESIGN: u64 = 2;

/// Settings of one strategy's experiment sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub strategy: Strategy,
    pub target: Target,
    /// Number of experiments `K` per repetition.
    pub steps: usize,
    /// Trajectory length `τ`.
    pub horizon: f64,
    pub repetitions: usize,
    /// Posterior draws `N_S` per criterion evaluation.
    pub num_samples: usize,
    /// Paths per draw `N_P` (parameter EIG only).
    pub num_paths: usize,
    pub seed: u64,
    pub max_parents: usize,
    /// Largest number of simultaneously clamped nodes in a candidate.
    pub max_targets: usize,
    pub prior: GammaPrior,
    pub support_threshold: f64,
    pub integrator: IntegratorConfig,
    pub optimizer: OptimizerConfig,
    pub exec: Exec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            strategy: Strategy::Vbhc,
            target: Target::Parameters,
            steps: 30,
            horizon: 3.0,
            repetitions: 50,
            num_samples: 10,
            num_paths: 10,
            seed: 0,
            max_parents: 3,
            max_targets: 2,
            prior: GammaPrior::default(),
            support_threshold: 1e-6,
            integrator: IntegratorConfig::default(),
            optimizer: OptimizerConfig::default(),
            exec: Exec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument("at least one repetition is required".into()));
        }
        if self.num_samples == 0 || self.num_paths == 0 {
            return Err(Error::InvalidArgument("num_samples and num_paths must be positive".into()));
        }
        if !(self.support_threshold >= 0.0 && self.support_threshold < 1.0) {
            return Err(Error::InvalidArgument("support_threshold must lie in [0, 1)".into()));
        }
        self.prior.validate()
    }

    pub fn design(&self) -> DesignConfig {
        DesignConfig {
            num_samples: self.num_samples,
            num_paths: self.num_paths,
            horizon: self.horizon,
            support_threshold: self.support_threshold,
            integrator: self.integrator,
            optimizer: self.optimizer,
            exec: self.exec,
        }
    }
}

/// Metrics after one step of one repetition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub repetition: usize,
    pub step: usize,
    pub strategy: Strategy,
    pub target: Target,
    /// Label of the chosen intervention; empty for the prior row.
    pub intervention: String,
    /// Initial joint state of the step's trajectory; empty for the prior row.
    pub initial: Vec<usize>,
    /// Criterion value of the chosen candidate for scored strategies.
    pub criterion: Option<f64>,
    pub mse: Option<f64>,
    pub auroc: Option<f64>,
    pub aupr: Option<f64>,
    pub entropy: Option<f64>,
}

pub const METRICS_HEADER: &str = "repetition,step,strategy,target,intervention,initial,criterion,mse,auroc,aupr,entropy";

/// Output of one repetition.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceOutcome {
    pub rows: Vec<MetricsRow>,
    pub trajectories: Vec<Trajectory>,
}

enum State {
    Parameters(RatePosterior),
    Structure {
        table: FamilyTable,
        posterior: StructurePosterior,
    },
}

impl State {
    fn new(truth: &Ctbn, config: &ExperimentConfig) -> Result<Self> {
        Ok(match config.target {
            Target::Parameters => State::Parameters(RatePosterior::prior(truth.cards(), truth.graph(), config.prior)?),
            Target::Structure => {
                let table = FamilyTable::new(truth.cards(), config.max_parents)?;
                let posterior = structure_posterior_from_table(&table, config.prior, |_, _| 0.0, Exec::Sequential)?;
                State::Structure { table, posterior }
            }
        })
    }

    fn belief(&self, prior: GammaPrior) -> Belief<'_> {
        match self {
            State::Parameters(p) => Belief::Parameters(p),
            State::Structure { table, posterior } => Belief::Structure {
                posterior,
                table,
                prior,
            },
        }
    }

    fn update(&mut self, truth: &Ctbn, path: &Trajectory, prior: GammaPrior) -> Result<()> {
        match self {
            State::Parameters(p) => *p = p.update(&extract_statistics(path, truth.cards(), truth.graph())?)?,
            State::Structure { table, posterior } => {
                table.add(path)?;
                *posterior = structure_posterior_from_table(table, prior, |_, _| 0.0, Exec::Sequential)?;
            }
        }
        Ok(())
    }

    fn row(&self, truth: &Ctbn, config: &ExperimentConfig, repetition: usize, step: usize) -> Result<MetricsRow> {
        let mut row = MetricsRow {
            repetition,
            step,
            strategy: config.strategy,
            target: config.target,
            intervention: String::new(),
            initial: Vec::new(),
            criterion: None,
            mse: None,
            auroc: None,
            aupr: None,
            entropy: None,
        };
        match self {
            State::Parameters(p) => row.mse = Some(mse_posterior(p, truth)?),
            State::Structure { posterior, .. } => {
                let (auroc, aupr) = auroc_aupr(&edge_marginals(posterior), &truth.graph().adjacency())?;
                row.auroc = Some(auroc);
                row.aupr = Some(aupr);
                row.entropy = Some(posterior_entropy(posterior));
            }
        }
        Ok(row)
    }
}

/// Runs repetition `repetition` of `config` against `truth`.
///
/// Streams are keyed by `(seed, repetition, step, purpose)`: the initial
/// state and the ground-truth path do not depend on the strategy, so
/// strategies choosing the same intervention see the same data.
pub fn run_sequence(truth: &Ctbn, config: &ExperimentConfig, repetition: usize) -> Result<SequenceOutcome> {
    config.validate()?;
    let candidates = clamp_candidates(truth.cards(), config.max_targets);
    run_sequence_with_candidates(truth, config, repetition, &candidates)
}

/// [`run_sequence`] with an explicit candidate set.
pub fn run_sequence_with_candidates(
    truth: &Ctbn,
    config: &ExperimentConfig,
    repetition: usize,
    candidates: &[Intervention],
) -> Result<SequenceOutcome> {
    config.validate()?;
    let design = config.design();
    let space = truth.joint_space();
    let mut state = State::new(truth, config)?;
    let mut rows = vec![state.row(truth, config, repetition, 0)?];
    let mut trajectories = Vec::with_capacity(config.steps);
    for step in 1..=config.steps {
        let key = |purpose: u64| [repetition as u64, step as u64, purpose];
        let s0 = space.decode(stream(config.seed, &key(INITIAL_STATE)).gen_range(0..space.size()));
        let selection = select_intervention(
            config.strategy,
            state.belief(config.prior),
            candidates,
            &s0,
            &design,
            stream_key(config.seed, &key(DESIGN)),
        )?;
        let iv = &candidates[selection.index];
        let mut start = s0.clone();
        iv.force_initial(&mut start);
        let path = sample_path(truth, iv, &start, config.horizon, &mut stream(config.seed, &key(TRUTH_PATH)))?;
        state.update(truth, &path, config.prior)?;
        let mut row = state.row(truth, config, repetition, step)?;
        row.intervention = iv.label();
        row.initial = start;
        row.criterion = selection.values.map(|v| v[selection.index].value);
        rows.push(row);
        trajectories.push(path);
    }
    Ok(SequenceOutcome { rows, trajectories })
}

/// Runs every repetition (in parallel when enabled) and concatenates the
/// rows in repetition order.
pub fn run_experiment(truth: &Ctbn, config: &ExperimentConfig) -> Result<Vec<MetricsRow>> {
    config.validate()?;
    let per_rep = par::try_map_range(config.exec, config.repetitions, |r| Ok(run_sequence(truth, config, r)?.rows))?;
    Ok(per_rep.into_iter().flatten().collect())
}

/// Per-step summary of one metric across repetitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub strategy: Strategy,
    pub target: Target,
    pub step: usize,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub q25: f64,
    pub q75: f64,
}

pub const SUMMARY_HEADER: &str = "strategy,target,step,metric,count,mean,variance,q25,q75";

/// Mean, variance and 25/75% quantiles per (strategy, target, step,
/// metric), in that sort order.
pub fn aggregate(rows: &[MetricsRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, String, usize, &'static str), (Strategy, Target, Vec<f64>)> = BTreeMap::new();
    for r in rows {
        let metrics = [("mse", r.mse), ("auroc", r.auroc), ("aupr", r.aupr), ("entropy", r.entropy)];
        for (name, v) in metrics {
            if let Some(v) = v {
                groups
                    .entry((r.strategy.to_string(), r.target.to_string(), r.step, name))
                    .or_insert_with(|| (r.strategy, r.target, Vec::new()))
                    .2
                    .push(v);
            }
        }
    }
    groups
        .into_iter()
        .map(|((_, _, step, metric), (strategy, target, mut xs))| {
            xs.sort_by(f64::total_cmp);
            SummaryRow {
                strategy,
                target,
                step,
                metric: metric.to_string(),
                count: xs.len(),
                mean: xs.iter().sum::<f64>() / xs.len() as f64,
                variance: variance(&xs),
                q25: quantile(&xs, 0.25),
                q75: quantile(&xs, 0.75),
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Writes rows under [`METRICS_HEADER`]; absent metrics are empty fields
/// and the initial state is written as space-separated node states.
pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], mut out: W) -> Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for r in rows {
        let initial: Vec<String> = r.initial.iter().map(usize::to_string).collect();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.repetition,
            r.step,
            r.strategy,
            r.target,
            r.intervention,
            initial.join(" "),
            opt(r.criterion),
            opt(r.mse),
            opt(r.auroc),
            opt(r.aupr),
            opt(r.entropy)
        )?;
    }
    Ok(())
}

/// Writes summaries under [`SUMMARY_HEADER`].
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], mut out: W) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.strategy, r.target, r.step, r.metric, r.count, r.mean, r.variance, r.q25, r.q75
        )?;
    }
    Ok(())
}

/// Values of `metric` at `step` per repetition, ordered by repetition.
pub fn metric_at_step(rows: &[MetricsRow], step: usize, metric: &str) -> Vec<f64> {
    let mut v: Vec<(usize, f64)> = rows
        .iter()
        .filter(|r| r.step == step)
        .filter_map(|r| {
            let x = match metric {
                "mse" => r.mse,
                "auroc" => r.auroc,
                "aupr" => r.aupr,
                "entropy" => r.entropy,
                "criterion" => r.criterion,
                _ => None,
            };
            x.map(|x| (r.repetition, x))
        })
        .collect();
    v.sort_by_key(|&(r, _)| r);
    v.into_iter().map(|(_, x)| x).collect()
}
