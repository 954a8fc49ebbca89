//! Huber ε-contamination adversaries.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};
use crate::game::GameShape;
use crate::rng::{reward_rng, stream_rng, ADVERSARY_STREAM};

/// What an adversary may rewrite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ContaminationModel {
    /// Whole tuples may be replaced.
    #[default]
    Arbitrary,
    /// `(s, a, b)` stay clean; `r` and `s'` may change.
    ObservationsOnly,
    /// Only `r` may change.
    RewardOnly,
}

/// A `(s, a, b)` cell, optionally restricted to one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleTarget {
    #[serde(default)]
    pub step: Option<usize>,
    pub state: usize,
    pub max_action: usize,
    pub min_action: usize,
}

impl TupleTarget {
    pub fn new(state: usize, max_action: usize, min_action: usize) -> Self {
        Self {
            step: None,
            state,
            max_action,
            min_action,
        }
    }

    fn matches(&self, h: usize, s: usize, a: usize, b: usize) -> bool {
        self.step.is_none_or(|t| t == h) && self.state == s && self.max_action == a && self.min_action == b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Adversary {
    /// Replaces uniformly chosen tuples with uniformly drawn ones; rewards
    /// are drawn from `U[0, H]`. Fields outside the model stay untouched.
    RandomReplace,
    /// Sets the reward of target visits whose reward differs from `value`
    /// to `value`.
    RewardFlip { target: TupleTarget, value: f64 },
    /// Sets target rewards to `value`, spreading the budget evenly over
    /// steps so no step slice carries more than its share.
    TargetedReward { target: TupleTarget, value: f64 },
    /// Shifts target rewards by `sqrt(strength * w_h / ε)`, where `w_h` is
    /// the target's visit frequency at step `h`. The added second moment
    /// per step is about `strength`, which keeps the shift below a spectral
    /// filter's detection threshold while biasing the mean by `O(√ε)`.
    DriftShift { target: TupleTarget, strength: f64 },
    /// Adds `Bernoulli(increment_prob)` to target rewards in index order
    /// until the budget runs out. The Bernoulli draw reuses the dataset's
    /// per-tuple reward stream for `seed`, so under a matched seed it
    /// reproduces the draws of a game whose target reward carries the same
    /// increment.
    LeastCovered { target: TupleTarget, increment_prob: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub epsilon: f64,
    #[serde(default)]
    pub model: ContaminationModel,
    pub adversary: Adversary,
    pub seed: u64,
    /// Replacements requested; defaults to the full budget.
    #[serde(default)]
    pub replacements: Option<usize>,
    /// Index space for replacement tuples; inferred from the data if absent.
    #[serde(default)]
    pub space: Option<GameShape>,
}

/// Instances that expose the tuple a least-covered attack should hit.
pub trait AttackTarget {
    fn attack_target(&self) -> TupleTarget;
    /// `S * A * B` of the instance.
    fn tuple_count(&self) -> usize;
}

/// `⌊ε · n⌋`, with a guard against representation error just below an integer.
pub fn contamination_budget(epsilon: f64, n: usize) -> usize {
    let raw = epsilon * n as f64;
    (raw + 1e-9 * raw.max(1.0)).floor() as usize
}

/// Applies an ε-contamination to a dataset. Untouched tuples stay bitwise
/// identical; altered ones are flagged in the corruption ledger.
///
/// `RandomReplace` alters exactly the requested number of tuples. Targeted
/// adversaries alter at most that many, limited by how often the target
/// occurs.
pub fn corrupt(d: &Dataset, spec: &CorruptionSpec) -> Result<Dataset, DataError> {
    if !(0.0..1.0).contains(&spec.epsilon) {
        return Err(DataError::InvalidSpec(format!(
            "epsilon {} outside [0, 1)",
            spec.epsilon
        )));
    }
    let n = d.observations().tuples.len();
    let budget = contamination_budget(spec.epsilon, n);
    let requested = spec.replacements.unwrap_or(budget);
    if requested > budget {
        return Err(DataError::BudgetExceeded { requested, budget });
    }
    let mut out = d.clone();
    if requested == 0 {
        return Ok(out);
    }
    let mut rng = stream_rng(spec.seed, ADVERSARY_STREAM);
    let (obs, mask) = out.parts_mut();
    let horizon = obs.horizon;
    let k = obs.k;
    let limits = match spec.space {
        Some(shape) => Limits {
            states: shape.states,
            max_actions: shape.max_actions,
            min_actions: shape.min_actions,
        },
        None => infer_limits(obs),
    };

    match spec.adversary {
        Adversary::RandomReplace => {
            let chosen = index::sample(&mut rng, n, requested);
            for i in chosen.iter() {
                let t = &mut obs.tuples[i];
                if spec.model == ContaminationModel::Arbitrary {
                    t.s = rng.random_range(0..limits.states);
                    t.a = rng.random_range(0..limits.max_actions);
                    t.b = rng.random_range(0..limits.min_actions);
                }
                if spec.model != ContaminationModel::RewardOnly {
                    t.s_next = rng.random_range(0..limits.states);
                }
                t.r = rng.random_range(0.0..=horizon as f64);
                mask[i] = true;
            }
        }
        Adversary::RewardFlip { target, value } => {
            let mut eligible: Vec<usize> = (0..n)
                .filter(|&i| {
                    let t = &obs.tuples[i];
                    target.matches(t.h, t.s, t.a, t.b) && t.r != value
                })
                .collect();
            eligible.shuffle(&mut rng);
            for &i in eligible.iter().take(requested) {
                obs.tuples[i].r = value;
                mask[i] = true;
            }
        }
        Adversary::TargetedReward { target, value } => {
            for (_, picks) in per_step_picks(obs, target, requested, horizon, &mut rng) {
                for i in picks {
                    obs.tuples[i].r = value;
                    mask[i] = true;
                }
            }
        }
        Adversary::DriftShift { target, strength } => {
            if !(strength >= 0.0) {
                return Err(DataError::InvalidSpec("drift strength must be >= 0".into()));
            }
            let visits = target_visits_per_step(obs, target, horizon);
            for (h, picks) in per_step_picks(obs, target, requested, horizon, &mut rng) {
                let freq = visits[h] as f64 / k.max(1) as f64;
                let shift = (strength * freq / spec.epsilon).sqrt();
                for i in picks {
                    obs.tuples[i].r += shift;
                    mask[i] = true;
                }
            }
        }
        Adversary::LeastCovered {
            target,
            increment_prob,
        } => {
            if !(0.0..=1.0).contains(&increment_prob) {
                return Err(DataError::InvalidSpec(format!(
                    "increment probability {increment_prob} outside [0, 1]"
                )));
            }
            let mut altered = 0;
            for i in 0..n {
                let t = obs.tuples[i];
                if !target.matches(t.h, t.s, t.a, t.b) {
                    continue;
                }
                let u: f64 = reward_rng(spec.seed, i as u64).random();
                if u > 1.0 - increment_prob {
                    if altered == requested {
                        break;
                    }
                    obs.tuples[i].r += 1.0;
                    mask[i] = true;
                    altered += 1;
                }
            }
        }
    }
    Ok(out)
}

/// Least-covered reward attack: increments `Bernoulli(S·A·B·ε)` on the
/// instance's target tuple, seeded with the dataset's own seed.
pub fn least_covered_attack<T: AttackTarget + ?Sized>(
    d: &Dataset,
    instance: &T,
    epsilon: f64,
) -> Result<Dataset, DataError> {
    let target = instance.attack_target();
    let visited = d
        .observations()
        .tuples
        .iter()
        .any(|t| target.matches(t.h, t.s, t.a, t.b));
    if !visited {
        log::warn!("least-covered attack: target {target:?} never visited; dataset unchanged");
        return Ok(d.clone());
    }
    let spec = CorruptionSpec {
        epsilon,
        model: ContaminationModel::RewardOnly,
        adversary: Adversary::LeastCovered {
            target,
            increment_prob: (instance.tuple_count() as f64 * epsilon).min(1.0),
        },
        seed: d.observations().seed,
        replacements: None,
        space: None,
    };
    corrupt(d, &spec)
}

struct Limits {
    states: usize,
    max_actions: usize,
    min_actions: usize,
}

fn infer_limits(obs: &super::Observations) -> Limits {
    let mut l = Limits {
        states: 1,
        max_actions: 1,
        min_actions: 1,
    };
    for t in &obs.tuples {
        l.states = l.states.max(t.s + 1).max(t.s_next + 1);
        l.max_actions = l.max_actions.max(t.a + 1);
        l.min_actions = l.min_actions.max(t.b + 1);
    }
    l
}

fn target_visits_per_step(obs: &super::Observations, target: TupleTarget, horizon: usize) -> Vec<usize> {
    let mut visits = vec![0; horizon];
    for t in &obs.tuples {
        if target.matches(t.h, t.s, t.a, t.b) {
            visits[t.h] += 1;
        }
    }
    visits
}

/// Splits `requested` evenly over steps (earlier steps take the remainder)
/// and picks that many target visits per step at random.
fn per_step_picks<R: Rng>(
    obs: &super::Observations,
    target: TupleTarget,
    requested: usize,
    horizon: usize,
    rng: &mut R,
) -> Vec<(usize, Vec<usize>)> {
    let mut by_step: Vec<Vec<usize>> = vec![Vec::new(); horizon];
    for (i, t) in obs.tuples.iter().enumerate() {
        if target.matches(t.h, t.s, t.a, t.b) {
            by_step[t.h].push(i);
        }
    }
    let active: Vec<usize> = (0..horizon)
        .filter(|h| target.step.is_none_or(|s| s == *h))
        .collect();
    let steps = active.len().max(1);
    active
        .into_iter()
        .enumerate()
        .map(|(rank, h)| {
            let quota = requested / steps + usize::from(rank < requested % steps);
            let mut idx = std::mem::take(&mut by_step[h]);
            idx.shuffle(rng);
            idx.truncate(quota);
            idx.sort_unstable();
            (h, idx)
        })
        .collect()
}
