use super::*;
use crate::model::{Graph, Intervention, NodeShape, ParentSet};
use crate::par::Exec;
use crate::sim::{extract_statistics, Event, SufficientStats, Trajectory};
use crate::stats::NodeStats;

fn one_cell(m: f64, t: f64) -> NodeStats {
    let mut s = NodeStats::zeros(NodeShape { card: 2, num_configs: 1 });
    s.add_trans(0, 0, 1, m);
    s.add_dwell(0, 0, t);
    s
}

#[test]
fn single_cell_log_likelihood() {
    let r = crate::model::NodeRates::from_nested(&[vec![vec![0.0, 1.0], vec![0.0, 0.0]]]).unwrap();
    assert_eq!(node_log_likelihood(&one_cell(2.0, 1.5), &r, 0).unwrap(), -1.5);
    assert_eq!(node_log_likelihood(&one_cell(0.0, 0.0), &r, 0).unwrap(), 0.0);
    let mut zero = one_cell(1.0, 1.0);
    zero.add_trans(0, 1, 0, 1.0);
    assert!(matches!(node_log_likelihood(&zero, &r, 3), Err(crate::Error::ZeroRateWithCount { node: 3 })));
}

#[test]
fn conjugate_update_adds_counts() {
    let g = NodeGamma::prior(NodeShape { card: 2, num_configs: 1 }, GammaPrior::default());
    let post = g.updated(&one_cell(2.0, 1.5)).unwrap();
    assert_eq!(post.alpha(0, 0, 1), 3.0);
    assert_eq!(post.beta(0, 0), 2.5);
    assert_eq!(post.alpha(0, 1, 0), 1.0);
    assert_eq!(g.updated(&one_cell(0.0, 0.0)).unwrap(), g);
}

#[test]
fn clamped_node_posterior_is_unchanged() {
    let graph = Graph::from_edges(2, &[(0, 1)]).unwrap();
    let prior = RatePosterior::prior(&[2, 2], &graph, GammaPrior::default()).unwrap();
    let t = Trajectory::new(
        vec![1, 0],
        vec![Event { time: 1.0, node: 1, state: 1 }],
        3.0,
        Intervention::clamps(2, &[(0, 1)]),
    );
    let post = prior.update(&extract_statistics(&t, &[2, 2], &graph).unwrap()).unwrap();
    assert_eq!(post.node(0), prior.node(0));
    assert_ne!(post.node(1), prior.node(1));
    assert_eq!(post.node(1).alpha(1, 0, 1), 2.0);
}

#[test]
fn marginal_likelihood_hand_values() {
    let p = GammaPrior::default();
    assert_eq!(structure_marginal_log_likelihood(&one_cell(0.0, 0.0), p).unwrap(), 0.0);
    // Only the 0 -> 1 cell: the 1 -> 0 cell has no dwell and no count.
    let v = structure_marginal_log_likelihood(&one_cell(1.0, 1.0), p).unwrap();
    assert!((v + 2.0 * 2f64.ln()).abs() < 1e-14);
    assert!(structure_marginal_log_likelihood(&one_cell(1.0, 1.0), GammaPrior { alpha: 0.0, beta: 1.0 }).is_err());
}

#[test]
fn no_data_gives_uniform_posterior() {
    let post = structure_posterior(&[], &[2, 2, 2], 2, GammaPrior::default(), Exec::Sequential).unwrap();
    for n in 0..3 {
        for p in post.probs(n) {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }
    assert!((posterior_entropy(&post) - 3.0 * 4f64.ln()).abs() < 1e-12);
}

#[test]
fn clamped_node_structure_posterior_is_prior() {
    let t = Trajectory::new(
        vec![1, 0],
        vec![Event { time: 1.0, node: 1, state: 1 }],
        3.0,
        Intervention::clamps(2, &[(0, 1)]),
    );
    let post = structure_posterior(&[t], &[2, 2], 1, GammaPrior::default(), Exec::Sequential).unwrap();
    for p in post.probs(0) {
        assert!((p - 0.5).abs() < 1e-12);
    }
    // A constant parent cannot be told apart from no parent.
    assert!((post.probs(1)[0] - 0.5).abs() < 1e-12);
}

#[test]
fn entropy_hand_values() {
    let two = StructurePosterior::from_log_scores(vec![vec![
        (ParentSet::EMPTY, 0.25f64.ln()),
        (ParentSet::from_nodes(&[1]), 0.75f64.ln()),
    ]])
    .unwrap();
    assert!((posterior_entropy(&two) - 0.5623351446188083).abs() < 1e-12);
    let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
    assert_eq!(posterior_entropy(&StructurePosterior::point_mass(&g, 2)), 0.0);
}

#[test]
fn edge_marginals_agree_with_brute_force() {
    let g = Graph::from_edges(3, &[(0, 1), (2, 1)]).unwrap();
    let pm = edge_marginals(&StructurePosterior::point_mass(&g, 2));
    assert_eq!(pm, vec![vec![0.0, 1.0, 0.0], vec![0.0; 3], vec![0.0, 1.0, 0.0]]);
    let half = StructurePosterior::from_log_scores(vec![
        vec![(ParentSet::EMPTY, 0.0), (ParentSet::from_nodes(&[1]), 0.0)],
        vec![(ParentSet::EMPTY, 0.0)],
    ])
    .unwrap();
    assert!((edge_marginals(&half)[1][0] - 0.5).abs() < 1e-15);
    let post = StructurePosterior::from_log_scores(vec![
        vec![(ParentSet::EMPTY, 0.1), (ParentSet::from_nodes(&[1]), -0.4), (ParentSet::from_nodes(&[2]), 1.0), (ParentSet::from_nodes(&[1, 2]), 0.3)],
        vec![(ParentSet::EMPTY, 0.0)],
        vec![(ParentSet::EMPTY, 0.0)],
    ])
    .unwrap();
    let em = edge_marginals(&post);
    let p = post.probs(0);
    assert!((em[1][0] - (p[1] + p[3])).abs() < 1e-15);
    assert!((em[2][0] - (p[2] + p[3])).abs() < 1e-15);
    assert_eq!(em[0][0], 0.0);
}

#[test]
fn concentrated_gamma_samples_near_the_mean() {
    let mut g = NodeGamma::prior(NodeShape { card: 2, num_configs: 1 }, GammaPrior { alpha: 1e4, beta: 1e4 / 2.5 });
    g.beta[1] = 1e4 / 0.5;
    let mut rng = crate::rng::stream(4, &[]);
    let (mut a, mut b) = (0.0, 0.0);
    for _ in 0..10_000 {
        let r = g.sample(&mut rng);
        assert!(r.rate(0, 0, 1) > 0.0 && r.rate(0, 1, 0) > 0.0);
        a += r.rate(0, 0, 1);
        b += r.rate(0, 1, 0);
    }
    assert!((a / 1e4 / 2.5 - 1.0).abs() < 0.01);
    assert!((b / 1e4 / 0.5 - 1.0).abs() < 0.01);
}

#[test]
fn posterior_sampling_is_seeded_per_node() {
    let graph = Graph::from_edges(2, &[(0, 1)]).unwrap();
    let prior = RatePosterior::prior(&[2, 2], &graph, GammaPrior::default()).unwrap();
    assert_eq!(prior.sample(5), prior.sample(5));
    assert_ne!(prior.sample(5), prior.sample(6));
    let mut other = prior.clone();
    other.nodes[0].alpha[1] = 7.0;
    assert_eq!(prior.sample(5).node(1), other.sample(5).node(1));
}

#[test]
fn sequential_and_pooled_updates_agree() {
    let graph = Graph::from_edges(2, &[(0, 1)]).unwrap();
    let model = crate::model::Ctbn::new(
        vec![2, 2],
        graph.clone(),
        vec![
            crate::model::NodeRates::from_nested(&[vec![vec![0.0, 1.0], vec![2.0, 0.0]]]).unwrap(),
            crate::model::NodeRates::from_nested(&[
                vec![vec![0.0, 0.5], vec![1.5, 0.0]],
                vec![vec![0.0, 3.0], vec![0.25, 0.0]],
            ])
            .unwrap(),
        ],
    )
    .unwrap();
    let mut rng = crate::rng::stream(8, &[]);
    let stats: Vec<SufficientStats> = (0..5)
        .map(|i| {
            let iv = if i % 2 == 0 { Intervention::none(2) } else { Intervention::clamps(2, &[(0, 0)]) };
            let t = crate::sim::sample_path(&model, &iv, &[0, 0], 3.0, &mut rng).unwrap();
            extract_statistics(&t, &[2, 2], &graph).unwrap()
        })
        .collect();
    let prior = RatePosterior::prior(&[2, 2], &graph, GammaPrior::default()).unwrap();
    let mut seq = prior.clone();
    for s in &stats {
        seq = seq.update(s).unwrap();
    }
    let pooled = prior.update(&crate::sim::pool(&stats).unwrap()).unwrap();
    assert_eq!(seq.nodes, pooled.nodes);
    assert_eq!(seq.data, pooled.data);
    let ll_pooled = path_log_likelihood(&crate::sim::pool(&stats).unwrap(), &model).unwrap();
    let ll_sum: f64 = stats.iter().map(|s| path_log_likelihood(s, &model).unwrap()).sum();
    assert!((ll_pooled - ll_sum).abs() < 1e-12);
}
