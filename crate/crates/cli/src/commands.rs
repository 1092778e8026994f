use crate::config::Settings;
use crate::error::CliError;
use ctbn_core::active::{
    aggregate, auroc_aupr, metric_at_step, run_experiment, write_metrics_csv, write_summary_csv, ExperimentConfig,
};
use ctbn_core::bayes::{edge_marginals, posterior_entropy, structure_posterior, GammaPrior, RatePosterior};
use ctbn_core::design::Target;
use ctbn_core::engine::IntegratorConfig;
use ctbn_core::filter::{
    incomplete_data_posterior_update, smoothed_marginals, ObservationDocument, ObservationEntry,
};
use ctbn_core::model::{amalgamate, Ctbn, Intervention, ModelDocument, Provenance};
use ctbn_core::par::Exec;
use ctbn_core::rng::stream;
use ctbn_core::sim::{extract_node_statistics, read_trajectories, sample_path, write_trajectories, Trajectory};
use rand::Rng;
use serde::Serialize;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

fn exec(settings: &Settings) -> Exec {
    if settings.workers == 1 {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

fn output_dir(settings: &Settings) -> Result<&Path, CliError> {
    fs::create_dir_all(&settings.out).map_err(|source| CliError::Output {
        path: settings.out.display().to_string(),
        source,
    })?;
    Ok(&settings.out)
}

fn write_file(path: PathBuf, contents: &str) -> Result<(), CliError> {
    fs::write(&path, contents).map_err(|source| CliError::Output {
        path: path.display().to_string(),
        source,
    })
}

fn create(path: PathBuf) -> Result<BufWriter<fs::File>, CliError> {
    fs::File::create(&path).map(BufWriter::new).map_err(|source| CliError::Output {
        path: path.display().to_string(),
        source,
    })
}

/// Snapshot of the settings plus the model with its provenance.
fn write_common(dir: &Path, settings: &Settings, model: &Ctbn, prov: Option<Provenance>) -> Result<(), CliError> {
    write_file(dir.join("config.toml"), &settings.to_toml()?)?;
    write_file(dir.join("model.json"), &(ModelDocument::from_model(model, prov).to_json()? + "\n"))
}

fn uniform_state<R: Rng>(cards: &[usize], rng: &mut R) -> Vec<usize> {
    cards.iter().map(|&c| rng.gen_range(0..c)).collect()
}

/// Writes the model and optionally observational paths from it.
pub fn generate(settings: &Settings) -> Result<(), CliError> {
    let (model, prov) = settings.load_model()?;
    let dir = output_dir(settings)?;
    write_common(dir, settings, &model, prov)?;
    if settings.num_trajectories > 0 {
        let iv = Intervention::none(model.num_nodes());
        let paths = (0..settings.num_trajectories as u64)
            .map(|k| {
                let s0 = uniform_state(model.cards(), &mut stream(settings.seed, &[k, 0]));
                sample_path(&model, &iv, &s0, settings.horizon, &mut stream(settings.seed, &[k, 1]))
            })
            .collect::<ctbn_core::Result<Vec<_>>>()?;
        write_trajectories(&dir.join("trajectories.json"), &paths)?;
    }
    eprintln!("wrote {}", dir.display());
    Ok(())
}

/// Runs every configured strategy and writes raw and aggregated metrics.
pub fn run(settings: &Settings) -> Result<(), CliError> {
    let (truth, prov) = settings.load_model()?;
    let dir = output_dir(settings)?;
    write_common(dir, settings, &truth, prov)?;
    let mut rows = Vec::new();
    for &strategy in &settings.strategies {
        let config = ExperimentConfig {
            strategy,
            target: settings.target,
            steps: settings.steps,
            horizon: settings.horizon,
            repetitions: settings.repetitions,
            num_samples: settings.samples,
            num_paths: settings.paths,
            seed: settings.seed,
            max_parents: settings.max_parents,
            max_targets: settings.max_targets,
            prior: settings.prior,
            support_threshold: settings.support_threshold,
            integrator: settings.integrator,
            optimizer: settings.optimizer,
            exec: exec(settings),
        };
        let strategy_rows = run_experiment(&truth, &config)?;
        let metric = match settings.target {
            Target::Parameters => "mse",
            Target::Structure => "aupr",
        };
        let last = metric_at_step(&strategy_rows, settings.steps, metric);
        if !last.is_empty() {
            eprintln!(
                "{strategy}: mean {metric} at step {} = {:.4}",
                settings.steps,
                last.iter().sum::<f64>() / last.len() as f64
            );
        }
        rows.extend(strategy_rows);
    }
    let mut out = create(dir.join("metrics.csv"))?;
    write_metrics_csv(&rows, &mut out)?;
    out.flush().map_err(ctbn_core::Error::from)?;
    let mut out = create(dir.join("summary.csv"))?;
    write_summary_csv(&aggregate(&rows), &mut out)?;
    out.flush().map_err(ctbn_core::Error::from)?;
    eprintln!("wrote {}", dir.display());
    Ok(())
}

#[derive(Serialize)]
struct ParentSetEntry {
    parents: Vec<usize>,
    probability: f64,
    log_probability: f64,
}

#[derive(Serialize)]
struct NodeEntry {
    node: usize,
    map_parents: Vec<usize>,
    parent_sets: Vec<ParentSetEntry>,
}

#[derive(Serialize)]
struct TruthEntry {
    edges: Vec<(usize, usize)>,
    auroc: f64,
    aupr: f64,
}

/// JSON document written by `score`.
#[derive(Serialize)]
struct ScoreReport {
    num_trajectories: usize,
    max_parents: usize,
    prior: GammaPrior,
    entropy: f64,
    map_edges: Vec<(usize, usize)>,
    edge_marginals: Vec<Vec<f64>>,
    nodes: Vec<NodeEntry>,
    truth: TruthEntry,
}

/// Exhaustive structure scoring of a trajectory file.
pub fn score(settings: &Settings) -> Result<(), CliError> {
    let (model, _) = settings.load_model()?;
    let trajectories: Vec<Trajectory> = match &settings.trajectories {
        Some(path) => read_trajectories(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        None => Vec::new(),
    };
    for (i, t) in trajectories.iter().enumerate() {
        t.validate(model.cards())
            .map_err(|e| CliError::Config(format!("trajectory {i}: {e}")))?;
    }
    let post = structure_posterior(
        &trajectories,
        model.cards(),
        settings.max_parents,
        settings.prior,
        exec(settings),
    )?;
    let marginals = edge_marginals(&post);
    let (auroc, aupr) = auroc_aupr(&marginals, &model.graph().adjacency())?;
    let nodes = (0..post.num_nodes())
        .map(|n| {
            let mut sets: Vec<ParentSetEntry> = post
                .node(n)
                .iter()
                .map(|s| ParentSetEntry {
                    parents: s.parents.to_vec(),
                    probability: s.log_prob.exp(),
                    log_probability: s.log_prob,
                })
                .collect();
            sets.sort_by(|a, b| b.log_probability.total_cmp(&a.log_probability));
            NodeEntry {
                node: n,
                map_parents: sets[0].parents.clone(),
                parent_sets: sets,
            }
        })
        .collect();
    let report = ScoreReport {
        num_trajectories: trajectories.len(),
        max_parents: settings.max_parents,
        prior: settings.prior,
        entropy: posterior_entropy(&post),
        map_edges: post.map_graph().edges(),
        edge_marginals: marginals,
        nodes,
        truth: TruthEntry {
            edges: model.graph().edges(),
            auroc,
            aupr,
        },
    };
    let dir = output_dir(settings)?;
    write_file(dir.join("config.toml"), &settings.to_toml()?)?;
    let json = serde_json::to_string_pretty(&report).map_err(ctbn_core::Error::from)?;
    write_file(dir.join("score.json"), &(json + "\n"))?;
    eprintln!("wrote {}", dir.display());
    Ok(())
}

#[derive(Serialize)]
struct FilterSummary {
    num_observations: usize,
    grid_points: usize,
    log_likelihood: f64,
}

/// Smooths a partially observed path of the model and writes marginals,
/// expected statistics and the updated rate posterior.
pub fn filter_demo(settings: &Settings) -> Result<(), CliError> {
    let (model, prov) = settings.load_model()?;
    let space = model.joint_space();
    let iv = Intervention::none(model.num_nodes());
    let s0 = uniform_state(model.cards(), &mut stream(settings.seed, &[0]));
    let path = sample_path(&model, &iv, &s0, settings.horizon, &mut stream(settings.seed, &[1]))?;

    let document = match &settings.observations {
        Some(p) => ObservationDocument::read(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => synthetic_observations(&model, &path, settings),
    };
    let series = document
        .to_series(&space)
        .map_err(|e| CliError::Config(format!("observations: {e}")))?;
    let ctmc = amalgamate(&model, &iv, &s0)?;
    let mut initial = vec![0.0; space.size()];
    initial[space.encode(&s0)] = 1.0;
    let config: IntegratorConfig = settings.integrator;
    let smoothed = smoothed_marginals(&ctmc, &initial, &series, settings.horizon, &config)?;

    let dir = output_dir(settings)?;
    write_common(dir, settings, &model, prov)?;
    write_file(dir.join("path.json"), &(path.to_json()? + "\n"))?;
    write_file(dir.join("observations.json"), &(document.to_json()? + "\n"))?;

    let mut out = create(dir.join("marginals.csv"))?;
    let labels: Vec<String> = (0..space.size())
        .map(|s| {
            let digits: Vec<String> = space.decode(s).iter().map(usize::to_string).collect();
            format!("p_{}", digits.join("_"))
        })
        .collect();
    let io = |e: std::io::Error| CliError::from(ctbn_core::Error::from(e));
    writeln!(out, "time,{}", labels.join(",")).map_err(io)?;
    for (t, p) in smoothed.grid.iter().zip(&smoothed.marginals) {
        let cells: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{t},{}", cells.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)?;

    let expected = smoothed.node_statistics(&space, model.graph())?;
    let mut out = create(dir.join("stats.csv"))?;
    writeln!(out, "node,u,x,x_next,transitions,dwell,true_transitions,true_dwell").map_err(io)?;
    for n in 0..model.num_nodes() {
        let truth = extract_node_statistics(&path, model.cards(), n, model.graph().parents(n))?;
        let shape = model.node(n).shape();
        for (u, x, x2) in shape.off_diagonal() {
            let (ti, di) = (shape.trans_index(u, x, x2), shape.dwell_index(u, x));
            writeln!(
                out,
                "{n},{u},{x},{x2},{},{},{},{}",
                expected[n].trans[ti], expected[n].dwell[di], truth.trans[ti], truth.dwell[di]
            )
            .map_err(io)?;
        }
    }
    out.flush().map_err(io)?;

    let prior = RatePosterior::prior(model.cards(), model.graph(), settings.prior)?;
    let posterior = incomplete_data_posterior_update(&prior, &smoothed, &space, &iv)?;
    write_file(dir.join("posterior.json"), &(posterior.to_json()? + "\n"))?;
    let summary = FilterSummary {
        num_observations: series.len(),
        grid_points: smoothed.grid.len(),
        log_likelihood: smoothed.log_likelihood,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(ctbn_core::Error::from)?;
    write_file(dir.join("summary.json"), &(json + "\n"))?;
    eprintln!("wrote {}", dir.display());
    Ok(())
}

/// Noisy readings of `path` every `observation_interval`: each node is
/// reported correctly with probability `1 − flip`, otherwise as a uniformly
/// drawn other state.
fn synthetic_observations(model: &Ctbn, path: &Trajectory, settings: &Settings) -> ObservationDocument {
    let mut rng = stream(settings.seed, &[2]);
    let cards = model.cards();
    let count = (settings.horizon / settings.observation_interval).floor() as usize;
    let observations = (1..=count)
        .map(|k| {
            let time = k as f64 * settings.observation_interval;
            let state = path
                .state_at(time)
                .iter()
                .zip(cards)
                .map(|(&x, &c)| {
                    if c > 1 && rng.gen::<f64>() < settings.flip {
                        let other = rng.gen_range(0..c - 1);
                        if other >= x {
                            other + 1
                        } else {
                            other
                        }
                    } else {
                        x
                    }
                })
                .collect();
            ObservationEntry::Noisy {
                time,
                state,
                flip: vec![settings.flip; cards.len()],
            }
        })
        .collect();
    ObservationDocument { observations }
}
