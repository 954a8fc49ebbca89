use std::collections::VecDeque;

use super::InstanceError;
use crate::datagen::{AttackTarget, BehaviorPolicy, TupleTarget};
use crate::game::{BernoulliCell, GameShape, TabularMG};

/// Two deterministic tree games that differ only in the reward law of one
/// tuple on the equilibrium path, so that a small reward corruption turns
/// one into the other.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeInstancePair {
    /// The unperturbed game; its equilibrium value from the root is `Hα`.
    pub g: TabularMG,
    /// The perturbed game; its equilibrium value from the root is `(2H − q)α`.
    pub g_prime: TabularMG,
    /// `(s*_q, a₁, b₁)`, at every step.
    pub target: TupleTarget,
    pub alpha: f64,
    /// Depth of the tree.
    pub q: usize,
    /// `s*_0, …, s*_q`.
    pub ne_path: Vec<usize>,
    /// Uniform joint behavior except at `s*_q`, where the target gets
    /// `0.4 / AB` of the mass.
    pub rho: BehaviorPolicy,
}

impl AttackTarget for TreeInstancePair {
    fn attack_target(&self) -> TupleTarget {
        self.target
    }

    fn tuple_count(&self) -> usize {
        self.g.shape().tuples()
    }
}

/// Builds the tree pair on `S` states with `A` max and `B` min actions.
///
/// States are assigned breadth-first from the root `0`. Every edge
/// `(a, b₁)` out of `s*_i` leads to `s*_{i+1}`, which is always the first
/// node of its level; other edges get fresh children in row-major `(a, b)`
/// order until states run out, after which they repeat the node's last
/// child. Childless nodes are absorbing.
///
/// Rewards: on `s*_i` with `i < q` the `a₁` row is `[α, 2α, …, 2α]`; on
/// `s*_q` it is `[α, Ber(2α), 3α, …, 3α]` in `G` and `α + Ber(2α)` replaces
/// the first entry in `G′`; off-path states pay 1 for `a₁`. All other
/// rewards are 0 and there is no Gaussian noise.
pub fn build_tree_pair(
    states: usize,
    max_actions: usize,
    min_actions: usize,
    horizon: usize,
    alpha: f64,
) -> Result<TreeInstancePair, InstanceError> {
    let shape = GameShape::new(states, max_actions, min_actions, horizon);
    shape.validate()?;
    if !(alpha > 0.0 && alpha < 1.0 / 3.0) {
        return Err(InstanceError::InvalidParameter(format!("alpha {alpha} outside (0, 1/3)")));
    }
    if min_actions < 2 || states < 2 {
        return Err(InstanceError::InvalidShape("the tree needs B >= 2 and S >= 2".into()));
    }
    let ab = (max_actions * min_actions) as f64;
    if states as f64 > ab.powf(horizon as f64 / 2.0) * (1.0 + 1e-12) {
        return Err(InstanceError::InvalidShape(format!(
            "S = {states} exceeds (AB)^(H/2) = {}",
            ab.powf(horizon as f64 / 2.0)
        )));
    }

    let edges = max_actions * min_actions;
    let mut child = vec![vec![usize::MAX; edges]; states];
    let mut path = vec![0usize];
    let mut next_free = 1;
    let mut queue = VecDeque::from([0usize]);
    while let Some(node) = queue.pop_front() {
        let on_path = path.last() == Some(&node);
        let mut star = None;
        let mut last = None;
        for a in 0..max_actions {
            for b in 0..min_actions {
                let target = if on_path && b == 0 && star.is_some() {
                    star
                } else if next_free < states {
                    let c = next_free;
                    next_free += 1;
                    queue.push_back(c);
                    if on_path && b == 0 {
                        star = Some(c);
                    }
                    Some(c)
                } else {
                    last
                };
                last = target.or(last);
                child[node][a * min_actions + b] = target.unwrap_or(node);
            }
        }
        if let Some(c) = star {
            path.push(c);
        }
    }
    let q = path.len() - 1;
    if q >= horizon {
        return Err(InstanceError::InvalidShape(format!("tree depth {q} must be below H = {horizon}")));
    }
    let leaf = path[q];

    let tuples = shape.tuples();
    let mut transitions = vec![0.0; horizon * tuples * states];
    let mut stage = vec![0.0; tuples];
    for s in 0..states {
        for e in 0..edges {
            let (a, b) = (e / min_actions, e % min_actions);
            let t = shape.tuple_index(s, a, b);
            for h in 0..horizon {
                transitions[(h * tuples + t) * states + child[s][e]] = 1.0;
            }
            if a != 0 {
                continue;
            }
            stage[t] = match path.iter().position(|&p| p == s) {
                Some(i) if i < q => {
                    if b == 0 {
                        alpha
                    } else {
                        2.0 * alpha
                    }
                }
                Some(_) => match b {
                    0 => alpha,
                    1 => 2.0 * alpha,
                    _ => 3.0 * alpha,
                },
                None => 1.0,
            };
        }
    }
    let x_cell = BernoulliCell { step: None, state: leaf, max_action: 0, min_action: 1, base: 0.0, prob: 2.0 * alpha };
    let target_cell = BernoulliCell { step: None, state: leaf, max_action: 0, min_action: 0, base: alpha, prob: 2.0 * alpha };
    let g = TabularMG::new(shape, transitions.clone(), stage.repeat(horizon), 0.0)?
        .with_bernoulli_cells(vec![x_cell])?;
    let mut stage_prime = stage;
    stage_prime[shape.tuple_index(leaf, 0, 0)] = target_cell.base + target_cell.prob;
    let g_prime = TabularMG::new(shape, transitions, stage_prime.repeat(horizon), 0.0)?
        .with_bernoulli_cells(vec![x_cell, target_cell])?;

    let uniform = 1.0 / edges as f64;
    let target_mass = 0.4 / edges as f64;
    let rest = (1.0 - target_mass) / (edges - 1) as f64;
    let mut probs = Vec::with_capacity(horizon * states * edges);
    for _ in 0..horizon {
        for s in 0..states {
            if s == leaf {
                probs.push(target_mass);
                probs.extend(std::iter::repeat_n(rest, edges - 1));
            } else {
                probs.extend(std::iter::repeat_n(uniform, edges));
            }
        }
    }
    let rho = BehaviorPolicy::new(shape, probs)?;

    Ok(TreeInstancePair {
        g,
        g_prime,
        target: TupleTarget::new(leaf, 0, 0),
        alpha,
        q,
        ne_path: path,
        rho,
    })
}
