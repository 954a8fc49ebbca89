//! Game models and the exact evaluation layer: matrix-game equilibria,
//! backward induction, best responses and suboptimality gaps.

mod io;
mod linear;
mod matrix;
mod solve;
mod strategy;
mod tabular;

pub use io::{load_game, save_game, GameFile, LoadedGame};
pub use linear::{one_hot_featurize, Features, LinearMG};
pub use matrix::{solve_matrix_game, MatrixGameSolution, DEFAULT_TOL};
pub use solve::{
    bellman_apply, best_response_value, best_response_values, ne_backward_induction,
    pair_values, subopt_gap, subopt_gap_at_start, Equilibrium, FixedSide,
};
pub use strategy::{Policy, StageQ, StrategyPair};
pub use tabular::{BellmanModel, BernoulliCell, InitialState, TabularMG};

use thiserror::Error;

/// Largest tuple space (`S * A * B`) accepted for exact evaluation.
pub const MAX_TUPLES: usize = 100_000;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("payoff matrix contains a non-finite entry")]
    NonFinitePayoff,
    #[error("matrix-game LP failed: {0}")]
    SolverFailure(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid game: {0}")]
    InvalidModel(String),
    #[error("tuple space S*A*B = {0} exceeds the cap of {MAX_TUPLES}")]
    TooLarge(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed game file: {0}")]
    Format(#[from] serde_json::Error),
}

/// Sizes of a finite game. Steps are indexed `0..horizon` internally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct GameShape {
    pub states: usize,
    pub max_actions: usize,
    pub min_actions: usize,
    pub horizon: usize,
}

impl GameShape {
    pub fn new(states: usize, max_actions: usize, min_actions: usize, horizon: usize) -> Self {
        Self {
            states,
            max_actions,
            min_actions,
            horizon,
        }
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if self.states == 0 || self.max_actions == 0 || self.min_actions == 0 || self.horizon == 0
        {
            return Err(GameError::InvalidModel(format!(
                "all sizes must be positive, got {self:?}"
            )));
        }
        let tuples = self.tuples();
        if tuples > MAX_TUPLES {
            return Err(GameError::TooLarge(tuples));
        }
        Ok(())
    }

    /// Number of `(s, a, b)` tuples.
    pub fn tuples(&self) -> usize {
        self.states * self.max_actions * self.min_actions
    }

    /// Flat index of `(s, a, b)`, row-major.
    #[inline]
    pub fn tuple_index(&self, s: usize, a: usize, b: usize) -> usize {
        (s * self.max_actions + a) * self.min_actions + b
    }

    /// Inverse of [`tuple_index`](Self::tuple_index).
    #[inline]
    pub fn tuple_coords(&self, index: usize) -> (usize, usize, usize) {
        let b = index % self.min_actions;
        let rest = index / self.min_actions;
        (rest / self.max_actions, rest % self.max_actions, b)
    }

    /// Remaining steps at 0-based step `h`; the clipping bound for stage `h`.
    #[inline]
    pub fn remaining(&self, h: usize) -> f64 {
        (self.horizon - h) as f64
    }
}
