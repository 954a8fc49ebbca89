use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::tabular::check_distribution;
use super::{GameError, GameShape};

const ROW_TOL: f64 = 1e-10;

/// Per-step, per-state mixed strategy of one player. Stored flat as
/// `[h][s][action]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<f64>>>", into = "Vec<Vec<Vec<f64>>>")]
pub struct Policy {
    horizon: usize,
    states: usize,
    actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    pub fn new(
        horizon: usize,
        states: usize,
        actions: usize,
        probs: Vec<f64>,
    ) -> Result<Self, GameError> {
        if probs.len() != horizon * states * actions || actions == 0 {
            return Err(GameError::DimensionMismatch(format!(
                "policy table has {} entries for shape ({horizon}, {states}, {actions})",
                probs.len()
            )));
        }
        for (i, row) in probs.chunks(actions).enumerate() {
            check_distribution(row, ROW_TOL).map_err(|msg| {
                GameError::InvalidModel(format!(
                    "policy row (h={}, s={}): {msg}",
                    i / states,
                    i % states
                ))
            })?;
        }
        Ok(Self {
            horizon,
            states,
            actions,
            probs,
        })
    }

    pub fn uniform(horizon: usize, states: usize, actions: usize) -> Self {
        Self {
            horizon,
            states,
            actions,
            probs: vec![1.0 / actions as f64; horizon * states * actions],
        }
    }

    /// Pure policy from one action per `(h, s)`, laid out `[h][s]`.
    pub fn deterministic(
        horizon: usize,
        states: usize,
        actions: usize,
        choice: &[usize],
    ) -> Result<Self, GameError> {
        if choice.len() != horizon * states {
            return Err(GameError::DimensionMismatch(format!(
                "{} choices for {horizon} steps x {states} states",
                choice.len()
            )));
        }
        let mut probs = vec![0.0; horizon * states * actions];
        for (i, &a) in choice.iter().enumerate() {
            if a >= actions {
                return Err(GameError::InvalidModel(format!("action {a} out of range")));
            }
            probs[i * actions + a] = 1.0;
        }
        Ok(Self {
            horizon,
            states,
            actions,
            probs,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    #[inline]
    pub fn row(&self, h: usize, s: usize) -> &[f64] {
        let start = (h * self.states + s) * self.actions;
        &self.probs[start..start + self.actions]
    }

    pub(crate) fn row_mut(&mut self, h: usize, s: usize) -> &mut [f64] {
        let start = (h * self.states + s) * self.actions;
        &mut self.probs[start..start + self.actions]
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.horizon)
            .map(|h| (0..self.states).map(|s| self.row(h, s).to_vec()).collect())
            .collect()
    }
}

impl TryFrom<Vec<Vec<Vec<f64>>>> for Policy {
    type Error = GameError;

    fn try_from(nested: Vec<Vec<Vec<f64>>>) -> Result<Self, Self::Error> {
        let horizon = nested.len();
        let states = nested.first().map_or(0, Vec::len);
        let actions = nested.first().and_then(|h| h.first()).map_or(0, Vec::len);
        if nested.iter().any(|h| h.len() != states || h.iter().any(|r| r.len() != actions)) {
            return Err(GameError::DimensionMismatch("ragged policy table".into()));
        }
        let probs = nested.into_iter().flatten().flatten().collect();
        Policy::new(horizon, states, actions, probs)
    }
}

impl From<Policy> for Vec<Vec<Vec<f64>>> {
    fn from(policy: Policy) -> Self {
        policy.to_nested()
    }
}

/// Strategies of the max player (`max`, π) and the min player
/// (`min`, ν).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyPair {
    pub max: Policy,
    pub min: Policy,
}

impl StrategyPair {
    pub fn uniform(shape: GameShape) -> Self {
        Self {
            max: Policy::uniform(shape.horizon, shape.states, shape.max_actions),
            min: Policy::uniform(shape.horizon, shape.states, shape.min_actions),
        }
    }

    pub fn check_shape(&self, shape: GameShape) -> Result<(), GameError> {
        check_policy(&self.max, shape, shape.max_actions)?;
        check_policy(&self.min, shape, shape.min_actions)
    }
}

pub(crate) fn check_policy(policy: &Policy, shape: GameShape, actions: usize) -> Result<(), GameError> {
    if policy.horizon != shape.horizon || policy.states != shape.states || policy.actions != actions
    {
        return Err(GameError::DimensionMismatch(format!(
            "policy shape ({}, {}, {}) does not match game ({}, {}, {actions})",
            policy.horizon, policy.states, policy.actions, shape.horizon, shape.states
        )));
    }
    Ok(())
}

/// A stage action-value table `Q(s, a, b)`, flat over the tuple index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<f64>>>", into = "Vec<Vec<Vec<f64>>>")]
pub struct StageQ {
    states: usize,
    max_actions: usize,
    min_actions: usize,
    values: Vec<f64>,
}

impl StageQ {
    pub fn zeros(shape: GameShape) -> Self {
        Self {
            states: shape.states,
            max_actions: shape.max_actions,
            min_actions: shape.min_actions,
            values: vec![0.0; shape.tuples()],
        }
    }

    pub fn from_flat(shape: GameShape, values: Vec<f64>) -> Result<Self, GameError> {
        if values.len() != shape.tuples() {
            return Err(GameError::DimensionMismatch(format!(
                "stage table has {} entries, expected {}",
                values.len(),
                shape.tuples()
            )));
        }
        Ok(Self {
            states: shape.states,
            max_actions: shape.max_actions,
            min_actions: shape.min_actions,
            values,
        })
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize, b: usize) -> f64 {
        self.values[(s * self.max_actions + a) * self.min_actions + b]
    }

    pub fn flat(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Payoff matrix at state `s`: rows are max-player actions.
    pub fn matrix(&self, s: usize) -> DMatrix<f64> {
        let start = s * self.max_actions * self.min_actions;
        DMatrix::from_row_slice(
            self.max_actions,
            self.min_actions,
            &self.values[start..start + self.max_actions * self.min_actions],
        )
    }

    /// `xᵀ Q(s) y`.
    pub fn bilinear(&self, s: usize, x: &[f64], y: &[f64]) -> f64 {
        let mut total = 0.0;
        for (a, xa) in x.iter().enumerate() {
            if *xa == 0.0 {
                continue;
            }
            for (b, yb) in y.iter().enumerate() {
                total += xa * yb * self.get(s, a, b);
            }
        }
        total
    }
}

impl TryFrom<Vec<Vec<Vec<f64>>>> for StageQ {
    type Error = GameError;

    fn try_from(nested: Vec<Vec<Vec<f64>>>) -> Result<Self, Self::Error> {
        let states = nested.len();
        let max_actions = nested.first().map_or(0, Vec::len);
        let min_actions = nested.first().and_then(|s| s.first()).map_or(0, Vec::len);
        if nested
            .iter()
            .any(|s| s.len() != max_actions || s.iter().any(|r| r.len() != min_actions))
        {
            return Err(GameError::DimensionMismatch("ragged stage table".into()));
        }
        Ok(Self {
            states,
            max_actions,
            min_actions,
            values: nested.into_iter().flatten().flatten().collect(),
        })
    }
}

impl From<StageQ> for Vec<Vec<Vec<f64>>> {
    fn from(q: StageQ) -> Self {
        (0..q.states)
            .map(|s| {
                (0..q.max_actions)
                    .map(|a| (0..q.min_actions).map(|b| q.get(s, a, b)).collect())
                    .collect()
            })
            .collect()
    }
}
