//! Offline dataset generation, per-step slicing and contamination.

mod corrupt;
mod io;

pub use corrupt::{
    contamination_budget, corrupt, least_covered_attack, Adversary, AttackTarget,
    ContaminationModel, CorruptionSpec, TupleTarget,
};
pub use io::{read_dataset, write_dataset, write_learner_view};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{GameError, GameShape, InitialState, TabularMG};
use crate::rng::{reward_rng, stream_rng, SPLIT_STREAM, TRAJECTORY_STREAM};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("adversary requested {requested} replacements but the budget is {budget}")]
    BudgetExceeded { requested: usize, budget: usize },
    #[error("invalid corruption spec: {0}")]
    InvalidSpec(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed dataset at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Game(#[from] GameError),
}

/// One observed transition `(s, a, b, r, s')` at step `h` of trajectory `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub tau: usize,
    pub h: usize,
    pub s: usize,
    pub a: usize,
    pub b: usize,
    pub r: f64,
    pub s_next: usize,
}

/// How a dataset is cut into the `H` groups the learner regresses on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SliceMode {
    /// Group `h` holds every trajectory's step-`h` tuple.
    #[default]
    Timestep,
    /// Tuples are shuffled (seeded) and dealt into `H` groups of `K`.
    /// This ignores step indices, so group `h` mixes transitions from all steps.
    RandomSplit,
}

impl SliceMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SliceMode::Timestep => "timestep",
            SliceMode::RandomSplit => "random-split",
        }
    }
}

impl std::str::FromStr for SliceMode {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "timestep" => Ok(SliceMode::Timestep),
            "random-split" => Ok(SliceMode::RandomSplit),
            other => Err(DataError::InvalidSpec(format!("unknown slice mode '{other}'"))),
        }
    }
}

/// The learner-facing part of a dataset: tuples without the corruption
/// ledger. Tuples are stored trajectory-major, `index = tau * H + h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub k: usize,
    pub horizon: usize,
    pub seed: u64,
    pub mode: SliceMode,
    pub tuples: Vec<Transition>,
}

impl Observations {
    /// Groups `D_h` for `h = 0..H` according to `mode`.
    pub fn slices(&self) -> Vec<Vec<Transition>> {
        slice_per_timestep(self)
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Visit counts per `(h, tuple)` under the timestep slicing.
    pub fn counts(&self, shape: GameShape) -> Vec<Vec<usize>> {
        let mut counts = vec![vec![0usize; shape.tuples()]; self.horizon];
        for t in &self.tuples {
            counts[t.h][shape.tuple_index(t.s, t.a, t.b)] += 1;
        }
        counts
    }

    /// Checks every index against a game shape.
    pub fn check_shape(&self, shape: GameShape) -> Result<(), DataError> {
        if self.horizon != shape.horizon {
            return Err(DataError::ShapeMismatch(format!(
                "dataset horizon {} vs game horizon {}",
                self.horizon, shape.horizon
            )));
        }
        if let Some(t) = self.tuples.iter().find(|t| {
            t.h >= shape.horizon
                || t.s >= shape.states
                || t.s_next >= shape.states
                || t.a >= shape.max_actions
                || t.b >= shape.min_actions
        }) {
            return Err(DataError::ShapeMismatch(format!("tuple {t:?} out of range")));
        }
        Ok(())
    }
}

/// A dataset with its corruption ledger. Only [`Dataset::observations`]
/// should reach learning code.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    obs: Observations,
    corrupted: Vec<bool>,
}

impl Dataset {
    pub fn new(obs: Observations, corrupted: Vec<bool>) -> Result<Self, DataError> {
        if corrupted.len() != obs.tuples.len() {
            return Err(DataError::ShapeMismatch(format!(
                "{} mask entries for {} tuples",
                corrupted.len(),
                obs.tuples.len()
            )));
        }
        Ok(Self { obs, corrupted })
    }

    pub fn clean(obs: Observations) -> Self {
        let n = obs.tuples.len();
        Self {
            obs,
            corrupted: vec![false; n],
        }
    }

    pub fn observations(&self) -> &Observations {
        &self.obs
    }

    pub fn into_observations(self) -> Observations {
        self.obs
    }

    pub fn corrupted_mask(&self) -> &[bool] {
        &self.corrupted
    }

    pub fn corrupted_count(&self) -> usize {
        self.corrupted.iter().filter(|c| **c).count()
    }

    pub fn with_mode(mut self, mode: SliceMode) -> Self {
        self.obs.mode = mode;
        self
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut Observations, &mut Vec<bool>) {
        (&mut self.obs, &mut self.corrupted)
    }
}

/// Behavior policy `ρ_h(· | s)` over joint actions, laid out
/// `[h][s][a * B + b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBehavior")]
pub struct BehaviorPolicy {
    shape: GameShape,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawBehavior {
    shape: GameShape,
    probs: Vec<f64>,
}

impl TryFrom<RawBehavior> for BehaviorPolicy {
    type Error = DataError;

    fn try_from(raw: RawBehavior) -> Result<Self, Self::Error> {
        Self::new(raw.shape, raw.probs)
    }
}

impl BehaviorPolicy {
    pub fn new(shape: GameShape, probs: Vec<f64>) -> Result<Self, DataError> {
        let joint = shape.max_actions * shape.min_actions;
        if probs.len() != shape.horizon * shape.states * joint {
            return Err(DataError::ShapeMismatch(format!(
                "behavior table has {} entries, expected {}",
                probs.len(),
                shape.horizon * shape.states * joint
            )));
        }
        for (i, row) in probs.chunks(joint).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-10 {
                return Err(DataError::InvalidSpec(format!(
                    "behavior row (h={}, s={}) is not a distribution",
                    i / shape.states,
                    i % shape.states
                )));
            }
        }
        Ok(Self { shape, probs })
    }

    pub fn uniform(shape: GameShape) -> Self {
        let joint = shape.max_actions * shape.min_actions;
        Self {
            shape,
            probs: vec![1.0 / joint as f64; shape.horizon * shape.states * joint],
        }
    }

    /// Same joint distribution at every step and state.
    pub fn stationary(shape: GameShape, joint: &[f64]) -> Result<Self, DataError> {
        let probs = joint
            .iter()
            .copied()
            .cycle()
            .take(shape.horizon * shape.states * joint.len())
            .collect();
        Self::new(shape, probs)
    }

    pub fn shape(&self) -> GameShape {
        self.shape
    }

    #[inline]
    pub fn row(&self, h: usize, s: usize) -> &[f64] {
        let joint = self.shape.max_actions * self.shape.min_actions;
        let start = (h * self.shape.states + s) * joint;
        &self.probs[start..start + joint]
    }

    #[inline]
    pub fn prob(&self, h: usize, s: usize, a: usize, b: usize) -> f64 {
        self.row(h, s)[a * self.shape.min_actions + b]
    }
}

/// Hook for the reward law used when sampling.
pub trait RewardSampler {
    fn sample(&self, mg: &TabularMG, h: usize, tuple: usize, rng: &mut ChaCha8Rng) -> f64;
}

/// The game's own reward law: Gaussian `N(r, γ²)`, or `base + Bernoulli`
/// for cells that declare one.
#[derive(Debug, Clone, Copy, Default)]
pub struct ModelNoise;

impl RewardSampler for ModelNoise {
    fn sample(&self, mg: &TabularMG, h: usize, tuple: usize, rng: &mut ChaCha8Rng) -> f64 {
        mg.sample_reward(h, tuple, rng)
    }
}

/// Samples `K` trajectories under `ρ` with the game's reward law.
pub fn sample_dataset(
    mg: &TabularMG,
    rho: &BehaviorPolicy,
    k: usize,
    seed: u64,
) -> Result<Dataset, DataError> {
    sample_dataset_with(mg, rho, k, seed, &ModelNoise)
}

/// [`sample_dataset`] with a custom reward sampler.
///
/// Actions and transitions come from one trajectory stream; each tuple's
/// reward comes from its own stream keyed by `tau * H + h`.
pub fn sample_dataset_with(
    mg: &TabularMG,
    rho: &BehaviorPolicy,
    k: usize,
    seed: u64,
    rewards: &dyn RewardSampler,
) -> Result<Dataset, DataError> {
    let shape = mg.shape();
    if rho.shape() != shape {
        return Err(DataError::ShapeMismatch(format!(
            "behavior policy shape {:?} vs game {shape:?}",
            rho.shape()
        )));
    }
    let horizon = shape.horizon;
    let mut rng = stream_rng(seed, TRAJECTORY_STREAM);
    let start = match mg.initial() {
        InitialState::State(_) => None,
        InitialState::Distribution(d) => Some(d.clone()),
    };
    let fixed_start = match mg.initial() {
        InitialState::State(s) => *s,
        InitialState::Distribution(_) => 0,
    };
    let mut tuples = Vec::with_capacity(k * horizon);
    for tau in 0..k {
        let mut s = match &start {
            Some(d) => categorical(d, &mut rng),
            None => fixed_start,
        };
        for h in 0..horizon {
            let joint = categorical(rho.row(h, s), &mut rng);
            let (a, b) = (joint / shape.min_actions, joint % shape.min_actions);
            let tuple = shape.tuple_index(s, a, b);
            let mut reward_stream = reward_rng(seed, (tau * horizon + h) as u64);
            let r = rewards.sample(mg, h, tuple, &mut reward_stream);
            let s_next = categorical(mg.next_state_dist(h, s, a, b), &mut rng);
            tuples.push(Transition {
                tau,
                h,
                s,
                a,
                b,
                r,
                s_next,
            });
            s = s_next;
        }
    }
    Ok(Dataset::clean(Observations {
        k,
        horizon,
        seed,
        mode: SliceMode::Timestep,
        tuples,
    }))
}

/// Splits observations into `H` groups according to their slice mode.
pub fn slice_per_timestep(obs: &Observations) -> Vec<Vec<Transition>> {
    match obs.mode {
        SliceMode::Timestep => {
            let mut groups = vec![Vec::with_capacity(obs.k); obs.horizon];
            for t in &obs.tuples {
                groups[t.h].push(*t);
            }
            groups
        }
        SliceMode::RandomSplit => {
            let mut rng = stream_rng(obs.seed, SPLIT_STREAM);
            let mut order: Vec<usize> = (0..obs.tuples.len()).collect();
            rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
            let size = obs.tuples.len().div_ceil(obs.horizon.max(1));
            let mut groups: Vec<Vec<Transition>> = order
                .chunks(size.max(1))
                .map(|chunk| chunk.iter().map(|&i| obs.tuples[i]).collect())
                .collect();
            groups.resize(obs.horizon, Vec::new());
            groups
        }
    }
}

pub(crate) fn categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}
