//! Run configuration: a TOML file merged with command-line flags.
//!
//! Flags always win over file values. Relative paths in a file are taken
//! relative to the file's directory.

use crate::error::CliError;
use ctbn_core::bayes::GammaPrior;
use ctbn_core::design::{OptimizerConfig, Strategy, Target};
use ctbn_core::engine::IntegratorConfig;
use ctbn_core::model::{preset, Ctbn, ModelDocument, ModelSpec, Provenance};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Keys accepted in a configuration file. Every field is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<String>,
    /// Model document to load instead of a preset.
    pub model: Option<PathBuf>,
    /// Generation spec for a custom ground truth.
    pub spec: Option<ModelSpec>,
    /// Seed of the rate draw for `spec`; presets carry their own.
    pub model_seed: Option<u64>,
    pub seed: Option<u64>,
    pub strategies: Option<Vec<Strategy>>,
    pub target: Option<Target>,
    pub steps: Option<usize>,
    pub repetitions: Option<usize>,
    pub horizon: Option<f64>,
    pub samples: Option<usize>,
    pub paths: Option<usize>,
    pub max_parents: Option<usize>,
    pub max_targets: Option<usize>,
    pub support_threshold: Option<f64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub prior: Option<GammaPrior>,
    pub integrator: Option<IntegratorConfig>,
    pub optimizer: Option<OptimizerConfig>,
    /// Trajectory file for `score`.
    pub trajectories: Option<PathBuf>,
    /// Paths sampled by `generate`.
    pub num_trajectories: Option<usize>,
    /// Observation document for `filter-demo`; synthesised when absent.
    pub observations: Option<PathBuf>,
    /// Spacing of synthesised observations.
    pub observation_interval: Option<f64>,
    /// Per-node misreport probability of synthesised observations.
    pub flip: Option<f64>,
}

/// Flag values that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub model: Option<PathBuf>,
    pub strategies: Option<Vec<Strategy>>,
    pub target: Option<Target>,
    pub steps: Option<usize>,
    pub repetitions: Option<usize>,
    pub horizon: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub trajectories: Option<PathBuf>,
    pub observations: Option<PathBuf>,
}

/// Where the ground truth comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSource {
    Preset(String),
    File(PathBuf),
    Spec { spec: ModelSpec, seed: u64 },
}

/// Fully resolved settings; serialised as the run's config snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub model: ModelSource,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
    pub target: Target,
    pub steps: usize,
    pub repetitions: usize,
    pub horizon: f64,
    pub samples: usize,
    pub paths: usize,
    pub max_parents: usize,
    pub max_targets: usize,
    pub support_threshold: f64,
    pub workers: usize,
    /// Not part of the snapshot, so relocated runs stay byte-identical.
    #[serde(skip)]
    pub out: PathBuf,
    pub prior: GammaPrior,
    pub integrator: IntegratorConfig,
    pub optimizer: OptimizerConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<PathBuf>,
    pub num_trajectories: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observations: Option<PathBuf>,
    pub observation_interval: f64,
    pub flip: f64,
}

/// A parsed file together with its text, kept for error locations.
pub struct LoadedFile {
    pub path: PathBuf,
    pub text: String,
    pub config: FileConfig,
}

impl LoadedFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(LoadedFile {
            path: path.to_path_buf(),
            text,
            config,
        })
    }

    /// `path:line` of the first assignment to `key`, or just the path.
    fn locate(&self, key: &str) -> String {
        let line = self.text.lines().position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .map_or(false, |rest| rest.trim_start().starts_with('='))
                || l == format!("[{key}]")
        });
        match line {
            Some(i) => format!("{}:{}", self.path.display(), i + 1),
            None => self.path.display().to_string(),
        }
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match self.path.parent() {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }
}

/// Merges file and flags, fills defaults and validates.
pub fn resolve(file: Option<&LoadedFile>, flags: &Overrides) -> Result<Settings, CliError> {
    let empty = FileConfig::default();
    let f = file.map_or(&empty, |l| &l.config);
    let where_ = |key: &str| match file {
        Some(l) if flag_absent(flags, key) => format!("{}: ", l.locate(key)),
        _ => format!("--{}: ", key.replace('_', "-")),
    };
    let path_of = |p: &PathBuf| file.map_or_else(|| p.clone(), |l| l.resolve(p));

    let model = match (&flags.preset, &flags.model) {
        (Some(_), Some(_)) => return Err(CliError::Config("--preset and --model are mutually exclusive".into())),
        (Some(p), None) => ModelSource::Preset(p.clone()),
        (None, Some(m)) => ModelSource::File(m.clone()),
        (None, None) => {
            let given = [f.preset.is_some(), f.model.is_some(), f.spec.is_some()];
            if given.iter().filter(|&&g| g).count() > 1 {
                return Err(CliError::Config(format!(
                    "{}only one of preset, model and spec may be given",
                    where_("preset")
                )));
            }
            if let Some(p) = &f.preset {
                ModelSource::Preset(p.clone())
            } else if let Some(m) = &f.model {
                ModelSource::File(path_of(m))
            } else if let Some(spec) = &f.spec {
                ModelSource::Spec {
                    spec: spec.clone(),
                    seed: f.model_seed.unwrap_or(0),
                }
            } else {
                ModelSource::Preset("synthetic-structure".into())
            }
        }
    };
    if let ModelSource::Preset(name) = &model {
        preset(name).map_err(|e| CliError::Config(format!("{}{e}", where_("preset"))))?;
    }

    let settings = Settings {
        model,
        seed: flags.seed.or(f.seed).unwrap_or(0),
        strategies: flags
            .strategies
            .clone()
            .or_else(|| f.strategies.clone())
            .unwrap_or_else(|| vec![Strategy::Vbhc, Strategy::Random]),
        target: flags.target.or(f.target).unwrap_or(Target::Structure),
        steps: flags.steps.or(f.steps).unwrap_or(30),
        repetitions: flags.repetitions.or(f.repetitions).unwrap_or(50),
        horizon: flags.horizon.or(f.horizon).unwrap_or(3.0),
        samples: flags.samples.or(f.samples).unwrap_or(10),
        paths: f.paths.unwrap_or(10),
        max_parents: f.max_parents.unwrap_or(3),
        max_targets: f.max_targets.unwrap_or(2),
        support_threshold: f.support_threshold.unwrap_or(1e-6),
        workers: flags.workers.or(f.workers).unwrap_or(0),
        out: flags
            .out
            .clone()
            .or_else(|| f.out.as_ref().map(path_of))
            .unwrap_or_else(|| PathBuf::from("ctbn-out")),
        prior: f.prior.unwrap_or_default(),
        integrator: f.integrator.unwrap_or_default(),
        optimizer: f.optimizer.unwrap_or_default(),
        trajectories: flags
            .trajectories
            .clone()
            .or_else(|| f.trajectories.as_ref().map(path_of)),
        num_trajectories: f.num_trajectories.unwrap_or(0),
        observations: flags
            .observations
            .clone()
            .or_else(|| f.observations.as_ref().map(path_of)),
        observation_interval: f.observation_interval.unwrap_or(0.1),
        flip: f.flip.unwrap_or(0.1),
    };

    let mut problems = Vec::new();
    let mut check = |ok: bool, key: &str, msg: &str| {
        if !ok {
            problems.push(format!("{}{msg}", where_(key)));
        }
    };
    check(!settings.strategies.is_empty(), "strategies", "at least one strategy is required");
    check(settings.repetitions > 0, "repetitions", "must be positive");
    check(
        settings.horizon > 0.0 && settings.horizon.is_finite(),
        "horizon",
        "must be positive and finite",
    );
    check(settings.samples > 0, "samples", "must be positive");
    check(settings.paths > 0, "paths", "must be positive");
    check(
        (0.0..1.0).contains(&settings.support_threshold),
        "support_threshold",
        "must lie in [0, 1)",
    );
    check(
        settings.prior.validate().is_ok(),
        "prior",
        "alpha and beta must be positive and finite",
    );
    check(
        settings.integrator.steps_per_unit > 0.0 && settings.integrator.min_steps >= 1,
        "integrator",
        "steps_per_unit and min_steps must be positive",
    );
    check(
        settings.observation_interval > 0.0 && settings.observation_interval.is_finite(),
        "observation_interval",
        "must be positive and finite",
    );
    check((0.0..1.0).contains(&settings.flip), "flip", "must lie in [0, 1)");
    if let Some(p) = &settings.trajectories {
        check(p.exists(), "trajectories", &format!("{} does not exist", p.display()));
    }
    if let Some(p) = &settings.observations {
        check(p.exists(), "observations", &format!("{} does not exist", p.display()));
    }
    if let ModelSource::File(p) = &settings.model {
        check(p.exists(), "model", &format!("{} does not exist", p.display()));
    }
    if problems.is_empty() {
        Ok(settings)
    } else {
        Err(CliError::Config(problems.join("\n")))
    }
}

fn flag_absent(flags: &Overrides, key: &str) -> bool {
    match key {
        "preset" => flags.preset.is_none() && flags.model.is_none(),
        "model" => flags.model.is_none() && flags.preset.is_none(),
        "strategies" => flags.strategies.is_none(),
        "steps" => flags.steps.is_none(),
        "repetitions" => flags.repetitions.is_none(),
        "horizon" => flags.horizon.is_none(),
        "samples" => flags.samples.is_none(),
        "trajectories" => flags.trajectories.is_none(),
        "observations" => flags.observations.is_none(),
        _ => true,
    }
}

impl Settings {
    /// Builds the ground truth and the provenance recorded with it.
    pub fn load_model(&self) -> Result<(Ctbn, Option<Provenance>), CliError> {
        match &self.model {
            ModelSource::Preset(name) => {
                let p = preset(name)?;
                let prov = Provenance {
                    preset: Some(name.clone()),
                    seed: p.seed,
                    spec: p.spec.clone(),
                };
                Ok((p.model()?, Some(prov)))
            }
            ModelSource::File(path) => {
                let doc = ModelDocument::read(path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                let model = doc
                    .to_model()
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                Ok((model, doc.provenance))
            }
            ModelSource::Spec { spec, seed } => {
                let model = ctbn_core::model::random_model(spec, &mut ctbn_core::rng::stream(*seed, &[]))
                    .map_err(|e| CliError::Config(format!("spec: {e}")))?;
                let prov = Provenance {
                    preset: None,
                    seed: *seed,
                    spec: spec.clone(),
                };
                Ok((model, Some(prov)))
            }
        }
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialise settings: {e}")))
    }
}
