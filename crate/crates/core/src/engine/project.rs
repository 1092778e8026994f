use super::{expected_statistics, solve_with_config, ExpectedStats, IntegratorConfig};
use crate::error::{Error, Result};
use crate::model::{amalgamate, num_configs, Ctbn, Graph, Intervention, JointSpace, NodeShape, ParentSet};
use crate::stats::NodeStats;

/// Projects joint statistics onto node `node` with parent set `parents`.
///
/// `T̂(x, u) = Σ_s E[T(s)] 1(s_n = x) 1(s_par = u)` and
/// `M̂(x, x', u) = Σ_s E[M(s, s')] 1(s_n = x) 1(s'_n = x') 1(s_par = u)`
/// where `s'` differs from `s` only at node `n`.
pub fn project_node(stats: &ExpectedStats, space: &JointSpace, node: usize, parents: ParentSet) -> NodeStats {
    let card = space.cards()[node];
    let shape = NodeShape {
        card,
        num_configs: num_configs(space.cards(), parents),
    };
    let mut out = NodeStats::zeros(shape);
    for s in 0..space.size() {
        let d = stats.joint_dwell[s];
        let t_row = &stats.joint_trans[s * space.size()..(s + 1) * space.size()];
        if d == 0.0 && t_row.iter().all(|&v| v == 0.0) {
            continue;
        }
        let x = space.coord(s, node);
        let u = space.config_of(s, parents);
        out.add_dwell(u, x, d);
        for x2 in 0..card {
            if x2 != x {
                out.add_trans(u, x, x2, t_row[space.with_coord(s, node, x2)]);
            }
        }
    }
    out
}

/// Projects onto every node under the parent sets of `graph`.
pub fn project_statistics(stats: &ExpectedStats, space: &JointSpace, graph: &Graph) -> Result<Vec<NodeStats>> {
    if graph.num_nodes() != space.num_nodes() {
        return Err(Error::Dimension(format!(
            "projection graph has {} nodes, state space has {}",
            graph.num_nodes(),
            space.num_nodes()
        )));
    }
    if stats.size() != space.size() {
        return Err(Error::Dimension(format!(
            "statistics cover {} joint states, space has {}",
            stats.size(),
            space.size()
        )));
    }
    Ok((0..graph.num_nodes())
        .map(|n| project_node(stats, space, n, graph.parents(n)))
        .collect())
}

/// Amalgamates, solves, takes expectations and projects under each graph.
pub fn expected_statistics_under_posterior_sample(
    model: &Ctbn,
    intervention: &Intervention,
    s0: &[usize],
    horizon: f64,
    graphs: &[&Graph],
    config: &IntegratorConfig,
) -> Result<Vec<Vec<NodeStats>>> {
    let ctmc = amalgamate(model, intervention, s0)?;
    let solution = solve_with_config(&ctmc, ctmc.initial(), horizon, config)?;
    let joint = expected_statistics(&solution, &ctmc);
    graphs
        .iter()
        .map(|g| project_statistics(&joint, ctmc.space(), g))
        .collect()
}
