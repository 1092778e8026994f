use ctbn_core::active::ranking_metrics;
use ctbn_core::bayes::{GammaPrior, RatePosterior};
use ctbn_core::design::project_simplex_floor;
use ctbn_core::engine::{endpoint_statistics, solve_with_config, IntegratorConfig};
use ctbn_core::model::{
    amalgamate, clamp_candidates, random_model, Ctbn, GenerationMode, Intervention, ModelDocument, ModelSpec, Speed,
};
use ctbn_core::rng::stream;
use ctbn_core::sim::{extract_statistics, pool, sample_path, Trajectory};
use proptest::prelude::*;

fn model_from(seed: u64, cards: &[usize], edge_bits: u32, softmax: bool) -> Ctbn {
    let n = cards.len();
    let edges = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j)
        .enumerate()
        .filter(|(k, _)| edge_bits >> k & 1 == 1)
        .map(|(_, e)| e)
        .collect();
    let spec = ModelSpec {
        cards: cards.to_vec(),
        speeds: (0..n).map(|i| if (seed >> i) & 1 == 0 { Speed::Fast } else { Speed::Slow }).collect(),
        edges,
        generation: if softmax { GenerationMode::default_softmax() } else { GenerationMode::default_gamma() },
    };
    random_model(&spec, &mut stream(seed, &[])).unwrap()
}

fn small_model() -> impl Strategy<Value = Ctbn> {
    (any::<u64>(), prop::collection::vec(2usize..=3, 2..=3), any::<u32>(), any::<bool>())
        .prop_map(|(seed, cards, bits, softmax)| model_from(seed, &cards, bits, softmax))
}

fn observed(model: &Ctbn, seed: u64, count: usize) -> Vec<Trajectory> {
    let candidates = clamp_candidates(model.cards(), 1);
    (0..count as u64)
        .map(|k| {
            let iv = &candidates[(seed as usize + k as usize) % candidates.len()];
            let mut s0 = vec![0; model.num_nodes()];
            iv.force_initial(&mut s0);
            sample_path(model, iv, &s0, 2.0, &mut stream(seed, &[k])).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generator_rows_sum_to_zero(model in small_model(), pick in any::<usize>()) {
        let candidates = clamp_candidates(model.cards(), 2);
        let iv = &candidates[pick % candidates.len()];
        let mut s0 = vec![0; model.num_nodes()];
        iv.force_initial(&mut s0);
        let ctmc = amalgamate(&model, iv, &s0).unwrap();
        let size = ctmc.size();
        for s in 0..size {
            let row = &ctmc.generator()[s * size..(s + 1) * size];
            let scale = row.iter().map(|v| v.abs()).fold(1.0, f64::max);
            prop_assert!(row.iter().sum::<f64>().abs() <= 1e-12 * scale);
            for (s2, v) in row.iter().enumerate() {
                prop_assert!(s2 == s || *v >= 0.0);
            }
        }
    }

    #[test]
    fn transient_slices_stay_normalised(model in small_model(), horizon in 0.1f64..4.0) {
        let s0 = vec![0; model.num_nodes()];
        let ctmc = amalgamate(&model, &Intervention::none(model.num_nodes()), &s0).unwrap();
        let sol = solve_with_config(&ctmc, 0, horizon, &IntegratorConfig::default()).unwrap();
        for p in sol.probs() {
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(p.iter().all(|v| *v >= -1e-12));
        }
        prop_assert!((sol.dwell().iter().sum::<f64>() - horizon).abs() < 1e-9 * horizon.max(1.0));
        let stats = endpoint_statistics(&ctmc, 0, horizon, &IntegratorConfig::default()).unwrap();
        prop_assert!((stats.joint_dwell.iter().sum::<f64>() - horizon).abs() < 1e-9 * horizon.max(1.0));
    }

    #[test]
    fn path_dwell_fills_the_horizon(model in small_model(), seed in any::<u64>()) {
        for path in observed(&model, seed, 3) {
            let stats = extract_statistics(&path, model.cards(), model.graph()).unwrap();
            for n in 0..model.num_nodes() {
                // Every node's time is filed under exactly one condition.
                let total: f64 = stats.node(n).by_condition.values().map(|s| s.total_dwell()).sum();
                prop_assert!((total - path.horizon).abs() < 1e-9);
            }
            let json = path.to_json().unwrap();
            prop_assert_eq!(Trajectory::from_json(&json).unwrap(), path);
        }
    }

    #[test]
    fn pooling_is_order_free(model in small_model(), seed in any::<u64>()) {
        let stats: Vec<_> = observed(&model, seed, 4)
            .iter()
            .map(|p| extract_statistics(p, model.cards(), model.graph()).unwrap())
            .collect();
        let mut reversed = stats.clone();
        reversed.reverse();
        let prior = RatePosterior::prior(model.cards(), model.graph(), GammaPrior::default()).unwrap();
        let a = prior.update(&pool(&stats).unwrap()).unwrap();
        let b = prior.update(&pool(&reversed).unwrap()).unwrap();
        for (x, y) in a.nodes.iter().zip(&b.nodes) {
            prop_assert_eq!(&x.alpha, &y.alpha);
            for (p, q) in x.beta.iter().zip(&y.beta) {
                prop_assert!((p - q).abs() <= 1e-12 * p.abs());
            }
        }
    }

    #[test]
    fn model_documents_round_trip(model in small_model()) {
        let json = ModelDocument::from_model(&model, None).to_json().unwrap();
        prop_assert_eq!(ModelDocument::from_json(&json).unwrap().to_model().unwrap(), model);
    }

    #[test]
    fn simplex_projection_is_feasible(y in prop::collection::vec(-5.0f64..5.0, 1..12), frac in 0.0f64..0.9) {
        let floor = frac / y.len() as f64;
        let q = project_simplex_floor(&y, floor);
        prop_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(q.iter().all(|v| *v >= floor - 1e-15));
        // Projection is idempotent.
        let again = project_simplex_floor(&q, floor);
        for (a, b) in q.iter().zip(&again) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn auroc_matches_pairwise_count(cells in prop::collection::vec((0u8..6, any::<bool>()), 2..30)) {
        prop_assume!(cells.iter().any(|c| c.1) && cells.iter().any(|c| !c.1));
        let scores: Vec<f64> = cells.iter().map(|c| c.0 as f64).collect();
        let labels: Vec<bool> = cells.iter().map(|c| c.1).collect();
        let (auroc, aupr) = ranking_metrics(&scores, &labels).unwrap();
        let (mut wins, mut pairs) = (0.0, 0.0);
        for (sp, _) in cells.iter().filter(|c| c.1) {
            for (sn, _) in cells.iter().filter(|c| !c.1) {
                pairs += 1.0;
                wins += if sp > sn { 1.0 } else if sp == sn { 0.5 } else { 0.0 };
            }
        }
        prop_assert!((auroc - wins / pairs).abs() < 1e-12);
        prop_assert!(aupr > 0.0 && aupr <= 1.0);
    }
}
