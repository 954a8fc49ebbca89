use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{GameError, GameShape};

const PROB_TOL: f64 = 1e-12;

/// Where episodes start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    State(usize),
    Distribution(Vec<f64>),
}

impl InitialState {
    pub fn distribution(&self, states: usize) -> Vec<f64> {
        match self {
            InitialState::State(s) => {
                let mut d = vec![0.0; states];
                d[*s] = 1.0;
                d
            }
            InitialState::Distribution(d) => d.clone(),
        }
    }
}

/// A reward cell whose realizations are `base + Bernoulli(prob)` instead of
/// Gaussian noise around the mean. `step = None` applies to every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliCell {
    #[serde(default)]
    pub step: Option<usize>,
    pub state: usize,
    pub max_action: usize,
    pub min_action: usize,
    pub base: f64,
    pub prob: f64,
}

/// Anything the Bellman operator can be applied to: per-step rewards and
/// transition rows over a flat `(s, a, b)` index.
pub trait BellmanModel {
    fn shape(&self) -> GameShape;
    fn reward(&self, h: usize, tuple: usize) -> f64;
    fn transition(&self, h: usize, tuple: usize) -> &[f64];
}

/// Finite-horizon two-player zero-sum Markov game with tabular dynamics.
///
/// Tables are flat: rewards `[h][tuple]`, transitions `[h][tuple][s']`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMG {
    shape: GameShape,
    transitions: Vec<f64>,
    rewards: Vec<f64>,
    gamma: f64,
    initial: InitialState,
    bernoulli: Vec<BernoulliCell>,
    // [h][tuple] -> (base, prob)
    bernoulli_lookup: Vec<Option<(f64, f64)>>,
}

impl TabularMG {
    pub fn new(
        shape: GameShape,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
        gamma: f64,
    ) -> Result<Self, GameError> {
        shape.validate()?;
        let n = shape.horizon * shape.tuples();
        if rewards.len() != n {
            return Err(GameError::DimensionMismatch(format!(
                "reward table has {} entries, expected {n}",
                rewards.len()
            )));
        }
        if transitions.len() != n * shape.states {
            return Err(GameError::DimensionMismatch(format!(
                "transition table has {} entries, expected {}",
                transitions.len(),
                n * shape.states
            )));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(GameError::InvalidModel(format!("noise scale {gamma} must be >= 0")));
        }
        if let Some(bad) = rewards.iter().position(|r| !(0.0..=1.0).contains(r)) {
            return Err(GameError::InvalidModel(format!(
                "reward mean {} at flat index {bad} outside [0, 1]",
                rewards[bad]
            )));
        }
        for (row_index, row) in transitions.chunks(shape.states).enumerate() {
            check_distribution(row, PROB_TOL).map_err(|msg| {
                GameError::InvalidModel(format!("transition row {row_index}: {msg}"))
            })?;
        }
        Ok(Self {
            shape,
            transitions,
            rewards,
            gamma,
            initial: InitialState::State(0),
            bernoulli: Vec::new(),
            bernoulli_lookup: vec![None; n],
        })
    }

    pub fn with_initial(mut self, initial: InitialState) -> Result<Self, GameError> {
        match &initial {
            InitialState::State(s) if *s >= self.shape.states => {
                return Err(GameError::InvalidModel(format!("initial state {s} out of range")));
            }
            InitialState::Distribution(d) => {
                if d.len() != self.shape.states {
                    return Err(GameError::DimensionMismatch(format!(
                        "initial distribution has {} entries, expected {}",
                        d.len(),
                        self.shape.states
                    )));
                }
                check_distribution(d, 1e-10).map_err(|msg| {
                    GameError::InvalidModel(format!("initial distribution: {msg}"))
                })?;
            }
            _ => {}
        }
        self.initial = initial;
        Ok(self)
    }

    /// Attaches Bernoulli reward laws. Each cell's mean `base + prob` must
    /// equal the stored reward mean.
    pub fn with_bernoulli_cells(mut self, cells: Vec<BernoulliCell>) -> Result<Self, GameError> {
        let shape = self.shape;
        let mut lookup = vec![None; shape.horizon * shape.tuples()];
        for cell in &cells {
            if cell.state >= shape.states
                || cell.max_action >= shape.max_actions
                || cell.min_action >= shape.min_actions
                || cell.step.is_some_and(|h| h >= shape.horizon)
            {
                return Err(GameError::InvalidModel(format!("Bernoulli cell {cell:?} out of range")));
            }
            if !(0.0..=1.0).contains(&cell.prob) || !cell.base.is_finite() {
                return Err(GameError::InvalidModel(format!("Bernoulli cell {cell:?} has invalid law")));
            }
            let tuple = shape.tuple_index(cell.state, cell.max_action, cell.min_action);
            let steps: Vec<usize> = match cell.step {
                Some(h) => vec![h],
                None => (0..shape.horizon).collect(),
            };
            for h in steps {
                let mean = self.rewards[h * shape.tuples() + tuple];
                if (cell.base + cell.prob - mean).abs() > 1e-12 {
                    return Err(GameError::InvalidModel(format!(
                        "Bernoulli cell {cell:?} has mean {} but the reward table stores {mean}",
                        cell.base + cell.prob
                    )));
                }
                lookup[h * shape.tuples() + tuple] = Some((cell.base, cell.prob));
            }
        }
        self.bernoulli = cells;
        self.bernoulli_lookup = lookup;
        Ok(self)
    }

    pub fn shape(&self) -> GameShape {
        self.shape
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn initial(&self) -> &InitialState {
        &self.initial
    }

    pub fn start_distribution(&self) -> Vec<f64> {
        self.initial.distribution(self.shape.states)
    }

    pub fn bernoulli_cells(&self) -> &[BernoulliCell] {
        &self.bernoulli
    }

    pub fn bernoulli_law(&self, h: usize, tuple: usize) -> Option<(f64, f64)> {
        self.bernoulli_lookup[h * self.shape.tuples() + tuple]
    }

    #[inline]
    pub fn reward_mean(&self, h: usize, s: usize, a: usize, b: usize) -> f64 {
        self.rewards[h * self.shape.tuples() + self.shape.tuple_index(s, a, b)]
    }

    #[inline]
    pub fn next_state_dist(&self, h: usize, s: usize, a: usize, b: usize) -> &[f64] {
        self.transition(h, self.shape.tuple_index(s, a, b))
    }

    /// Reward means at step `h`, indexed by flat tuple.
    pub fn reward_table(&self, h: usize) -> &[f64] {
        let n = self.shape.tuples();
        &self.rewards[h * n..(h + 1) * n]
    }

    pub fn rewards_flat(&self) -> &[f64] {
        &self.rewards
    }

    pub fn transitions_flat(&self) -> &[f64] {
        &self.transitions
    }

    /// Draws a reward realization. Bernoulli cells consume exactly one
    /// uniform variate first, so coupled games stay aligned.
    pub fn sample_reward<R: Rng + ?Sized>(&self, h: usize, tuple: usize, rng: &mut R) -> f64 {
        match self.bernoulli_law(h, tuple) {
            Some((base, prob)) => {
                let u: f64 = rng.random();
                base + if u > 1.0 - prob { 1.0 } else { 0.0 }
            }
            None => {
                let mean = self.rewards[h * self.shape.tuples() + tuple];
                if self.gamma > 0.0 {
                    let z: f64 = rng.sample(StandardNormal);
                    mean + self.gamma * z
                } else {
                    mean
                }
            }
        }
    }
}

impl BellmanModel for TabularMG {
    fn shape(&self) -> GameShape {
        self.shape
    }

    #[inline]
    fn reward(&self, h: usize, tuple: usize) -> f64 {
        self.rewards[h * self.shape.tuples() + tuple]
    }

    #[inline]
    fn transition(&self, h: usize, tuple: usize) -> &[f64] {
        let s = self.shape.states;
        let start = (h * self.shape.tuples() + tuple) * s;
        &self.transitions[start..start + s]
    }
}

pub(crate) fn check_distribution(row: &[f64], tol: f64) -> Result<(), String> {
    if let Some(p) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(format!("entry {p} is not a probability"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(format!("entries sum to {sum}"));
    }
    Ok(())
}
