use super::trajectory::{Event, Trajectory};
use crate::error::{Error, Result};
use crate::model::{apply_intervention, config_index, AmalgamatedCtmc, Ctbn, Intervention};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

/// Exact Gillespie simulation of `model` under `intervention` from `s0`.
///
/// Each step draws an exponential holding time with the total exit rate
/// of the current joint state, then a node and target state with
/// probability proportional to their rates.
pub fn sample_path<R: Rng + ?Sized>(
    model: &Ctbn,
    intervention: &Intervention,
    s0: &[usize],
    horizon: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    model.joint_space().check_state(s0)?;
    intervention.check_initial(s0)?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    let effective = apply_intervention(model, intervention)?;
    let cards = model.cards();
    let graph = model.graph();
    let n = model.num_nodes();
    let mut state = s0.to_vec();
    let mut events = Vec::new();
    let mut exits = vec![0.0; n];
    let mut t = 0.0;
    loop {
        let mut total = 0.0;
        for (m, e) in exits.iter_mut().enumerate() {
            let u = config_index(&state, cards, graph.parents(m));
            *e = effective.node(m).exit_rate(u, state[m]);
            total += *e;
        }
        if !total.is_finite() {
            return Err(Error::InvalidArgument("non-finite exit rate".into()));
        }
        if total <= 0.0 {
            break;
        }
        let wait: f64 = Exp1.sample(rng);
        t += wait / total;
        if t > horizon {
            break;
        }
        let mut pick = rng.gen::<f64>() * total;
        let mut node = n - 1;
        for (m, &e) in exits.iter().enumerate() {
            if pick < e {
                node = m;
                break;
            }
            pick -= e;
        }
        if exits[node] <= 0.0 {
            node = exits.iter().rposition(|&e| e > 0.0).expect("positive total exit rate");
        }
        let rates = effective.node(node);
        let u = config_index(&state, cards, graph.parents(node));
        let x = state[node];
        let mut pick = rng.gen::<f64>() * exits[node];
        let mut target = None;
        for x2 in (0..cards[node]).filter(|&x2| x2 != x) {
            let r = rates.rate(u, x, x2);
            if r > 0.0 {
                target = Some(x2);
                if pick < r {
                    break;
                }
                pick -= r;
            }
        }
        let x2 = target.expect("node with positive exit rate has a target");
        state[node] = x2;
        events.push(Event { time: t, node, state: x2 });
    }
    Ok(Trajectory::new(s0.to_vec(), events, horizon, intervention.clone()))
}

/// Gillespie simulation directly on an amalgamated generator.
///
/// Events are reported per node by decoding the joint jumps; the
/// trajectory carries `intervention` as given.
pub fn sample_joint_path<R: Rng + ?Sized>(
    ctmc: &AmalgamatedCtmc,
    intervention: &Intervention,
    horizon: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    let space = ctmc.space();
    let size = ctmc.size();
    let mut s = ctmc.initial();
    let mut events = Vec::new();
    let mut t = 0.0;
    loop {
        let total = -ctmc.rate(s, s);
        if total <= 0.0 {
            break;
        }
        let wait: f64 = Exp1.sample(rng);
        t += wait / total;
        if t > horizon {
            break;
        }
        let mut pick = rng.gen::<f64>() * total;
        let mut next = None;
        for s2 in (0..size).filter(|&s2| s2 != s) {
            let r = ctmc.rate(s, s2);
            if r > 0.0 {
                next = Some(s2);
                if pick < r {
                    break;
                }
                pick -= r;
            }
        }
        let s2 = next.expect("state with positive exit rate has a successor");
        let node = (0..space.num_nodes())
            .find(|&m| space.coord(s, m) != space.coord(s2, m))
            .expect("successor differs in one node");
        events.push(Event {
            time: t,
            node,
            state: space.coord(s2, node),
        });
        s = s2;
    }
    Ok(Trajectory::new(space.decode(ctmc.initial()), events, horizon, intervention.clone()))
}
