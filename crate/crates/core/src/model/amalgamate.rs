use super::ctbn::{Ctbn, JointSpace};
use super::intervention::{apply_intervention, Intervention};
use crate::error::{Error, Result};

/// Flat joint-state chain equivalent to a CTBN under an intervention.
///
/// `generator` is dense and row-major, `W[s * size + s']`.
#[derive(Clone, Debug, PartialEq)]
pub struct AmalgamatedCtmc {
    space: JointSpace,
    generator: Vec<f64>,
    initial: usize,
}

impl AmalgamatedCtmc {
    /// Builds a chain directly from a generator; off-diagonals must be
    /// non-negative and the diagonal is recomputed from them.
    pub fn from_generator(space: JointSpace, mut generator: Vec<f64>, initial: usize) -> Result<Self> {
        let n = space.size();
        if generator.len() != n * n {
            return Err(Error::Dimension(format!(
                "generator has {} entries, expected {}",
                generator.len(),
                n * n
            )));
        }
        if initial >= n {
            return Err(Error::Dimension(format!("initial state {initial} outside 0..{n}")));
        }
        for s in 0..n {
            let mut exit = 0.0;
            for s2 in 0..n {
                let v = generator[s * n + s2];
                if s2 == s {
                    continue;
                }
                if !v.is_finite() {
                    return Err(Error::NonFiniteGenerator { row: s, col: s2 });
                }
                if v < 0.0 {
                    return Err(Error::InvalidArgument(format!("negative rate W({s},{s2}) = {v}")));
                }
                exit += v;
            }
            generator[s * n + s] = -exit;
        }
        Ok(AmalgamatedCtmc {
            space,
            generator,
            initial,
        })
    }

    pub fn space(&self) -> &JointSpace {
        &self.space
    }

    pub fn size(&self) -> usize {
        self.space.size()
    }

    pub fn generator(&self) -> &[f64] {
        &self.generator
    }

    #[inline]
    pub fn rate(&self, s: usize, s2: usize) -> f64 {
        self.generator[s * self.space.size() + s2]
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn max_exit_rate(&self) -> f64 {
        (0..self.size()).map(|s| -self.rate(s, s)).fold(0.0, f64::max)
    }

    /// Joint states reachable from `start` along positive rates, ascending.
    pub fn reachable_from(&self, start: usize) -> Vec<usize> {
        let n = self.size();
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(s) = stack.pop() {
            for s2 in 0..n {
                if s2 != s && !seen[s2] && self.rate(s, s2) > 0.0 {
                    seen[s2] = true;
                    stack.push(s2);
                }
            }
        }
        (0..n).filter(|&s| seen[s]).collect()
    }
}

/// Amalgamates `model` under `intervention` into a joint generator.
///
/// `W(s, s')` is the rate of the single node in which `s` and `s'` differ,
/// read at the parent configuration of `s`; all multi-node jumps are zero.
pub fn amalgamate(model: &Ctbn, intervention: &Intervention, initial: &[usize]) -> Result<AmalgamatedCtmc> {
    let space = model.joint_space();
    space.check_state(initial)?;
    intervention.validate(model)?;
    intervention.check_initial(initial)?;
    let effective = apply_intervention(model, intervention)?;
    let generator = build_generator(&effective, &space);
    Ok(AmalgamatedCtmc {
        initial: space.encode(initial),
        space,
        generator,
    })
}

/// Dense generator of an (already intervened) model.
pub fn build_generator(model: &Ctbn, space: &JointSpace) -> Vec<f64> {
    let n = space.size();
    let mut w = vec![0.0; n * n];
    for s in 0..n {
        let mut exit = 0.0;
        for node in 0..model.num_nodes() {
            let rates = model.node(node);
            let u = space.config_of(s, model.graph().parents(node));
            let x = space.coord(s, node);
            for x2 in 0..rates.card() {
                if x2 == x {
                    continue;
                }
                let r = rates.rate(u, x, x2);
                if r > 0.0 {
                    w[s * n + space.with_coord(s, node, x2)] = r;
                    exit += r;
                }
            }
        }
        w[s * n + s] = -exit;
    }
    w
}
