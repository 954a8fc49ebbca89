//! Pessimistic minimax value iteration with pluggable robust estimators and
//! bonuses.

mod bonus;
mod diagnostics;
mod linear;
mod tabular;

pub use bonus::{compute_bonus, scram_error_bound, BonusConstants, BonusEvaluator, BonusKind, BonusSpec};
pub use diagnostics::{bellman_error_diagnostics, bonus_gap_bound, pessimism_holds, BellmanErrors};
pub use linear::{robust_pmvi, EstimatorConfig, EstimatorKind};
pub use tabular::{estimate_model, f_pmvi, plan_pessimistic, EmpiricalModel, FilterPmviConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::CoverageError;
use crate::datagen::{DataError, SliceMode};
use crate::estimators::{EstimatorError, FitStatus};
use crate::game::{GameError, GameShape, Policy, StageQ, StrategyPair};

#[derive(Debug, Error)]
pub enum PmviError {
    #[error("step {0} has no tuples")]
    EmptySlice(usize),
    #[error("covariance matrix is not positive definite")]
    SingularCovariance,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
}

/// Per-step record of what the estimators did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub h: usize,
    pub samples: usize,
    /// Regression weights (linear variant) or empty (tabular variant).
    pub weights_lower: Vec<f64>,
    pub weights_upper: Vec<f64>,
    /// Points removed by the lower and upper fits. The tabular variant
    /// stores its reward filter in the lower slot and its transition filter
    /// in the upper slot.
    pub removed_lower: usize,
    pub removed_upper: usize,
    pub status_lower: FitStatus,
    pub status_upper: FitStatus,
    pub bonus_max: f64,
    pub bonus_mean: f64,
}

/// Learned strategies with the pessimistic and optimistic estimates that
/// produced them. Value tables run over `h = 0..=H` with a zero last row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmviOutput {
    pub shape: GameShape,
    pub mode: SliceMode,
    /// `(π̂, ν̂)`: max strategy from the lower estimate, min strategy from the upper one.
    pub pair: StrategyPair,
    /// `ν′`: the min strategy paired with `π̂` in the lower stage games.
    pub lower_min: Policy,
    /// `π′`: the max strategy paired with `ν̂` in the upper stage games.
    pub upper_max: Policy,
    pub q_lower: Vec<StageQ>,
    pub q_upper: Vec<StageQ>,
    pub v_lower: Vec<Vec<f64>>,
    pub v_upper: Vec<Vec<f64>>,
    /// `Γ_h(s, a, b)`.
    pub bonus: Vec<StageQ>,
    pub steps: Vec<StepDiagnostics>,
}

/// `min{cap, max{x, 0}}`.
#[inline]
pub(crate) fn clip(x: f64, cap: f64) -> f64 {
    x.max(0.0).min(cap)
}

/// Solves the lower and upper stage games at every state of step `h` and
/// writes strategies and values into `out`.
pub(crate) fn solve_stage(
    out: &mut PmviOutput,
    h: usize,
    q_lower: &StageQ,
    q_upper: &StageQ,
) -> Result<(), PmviError> {
    use crate::game::{solve_matrix_game, DEFAULT_TOL};
    for s in 0..out.shape.states {
        let lower = solve_matrix_game(&q_lower.matrix(s), DEFAULT_TOL)?;
        let upper = solve_matrix_game(&q_upper.matrix(s), DEFAULT_TOL)?;
        out.v_lower[h][s] = q_lower.bilinear(s, &lower.x, &lower.y);
        out.v_upper[h][s] = q_upper.bilinear(s, &upper.x, &upper.y);
        out.pair.max.row_mut(h, s).copy_from_slice(&lower.x);
        out.lower_min.row_mut(h, s).copy_from_slice(&lower.y);
        out.upper_max.row_mut(h, s).copy_from_slice(&upper.x);
        out.pair.min.row_mut(h, s).copy_from_slice(&upper.y);
    }
    Ok(())
}

impl PmviOutput {
    pub(crate) fn empty(shape: GameShape, mode: SliceMode) -> Self {
        let pair = StrategyPair::uniform(shape);
        Self {
            shape,
            mode,
            lower_min: pair.min.clone(),
            upper_max: pair.max.clone(),
            pair,
            q_lower: vec![StageQ::zeros(shape); shape.horizon],
            q_upper: vec![StageQ::zeros(shape); shape.horizon],
            v_lower: vec![vec![0.0; shape.states]; shape.horizon + 1],
            v_upper: vec![vec![0.0; shape.states]; shape.horizon + 1],
            bonus: vec![StageQ::zeros(shape); shape.horizon],
            steps: Vec::with_capacity(shape.horizon),
        }
    }
}
