use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{clip, solve_stage, BonusEvaluator, BonusSpec, PmviError, PmviOutput, StepDiagnostics};
use crate::datagen::Observations;
use crate::estimators::{ridge_fit, rls_fit, scram_fit, RegressionProblem, RobustFit};
use crate::game::{Features, StageQ};
use crate::rng::derive_seed;

/// Regression oracle used for the Bellman targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimatorKind {
    /// Non-robust ridge regression with penalty 1.
    Ridge,
    /// Trimmed regression for clean covariates.
    Scram,
    /// Influence-filtered regression; `kappa` is the assumed covariance floor.
    Rls { kappa: f64 },
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Ridge => "ridge",
            EstimatorKind::Scram => "scram",
            EstimatorKind::Rls { .. } => "rls",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    /// Assumed contamination level handed to the oracle.
    pub epsilon: f64,
    /// Reward noise scale γ; regression targets get scale `H + γ`.
    pub gamma: f64,
    pub seed: u64,
}

/// Robust PMVI on linear features.
///
/// Backwards over steps: regress `r + V̲_{h+1}(s')` and `r + V̄_{h+1}(s')`
/// on `φ(s, a, b)` with the chosen oracle, set
/// `Q̲_h = Π(φᵀω̲ − Γ_h)` and `Q̄_h = Π(φᵀω̄ + Γ_h)` with `Π` clipping to
/// `[0, H − h]`, then solve the stage games: `(π̂, ν′)` on `Q̲_h` and
/// `(π′, ν̂)` on `Q̄_h`. `Γ_h` is evaluated with `Λ_h = Σ φφᵀ + I`.
pub fn robust_pmvi(
    obs: &Observations,
    features: &Features,
    estimator: &EstimatorConfig,
    bonus: &BonusSpec,
    delta: f64,
) -> Result<PmviOutput, PmviError> {
    let shape = features.shape();
    obs.check_shape(shape)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(PmviError::InvalidConfig(format!("delta {delta} outside (0, 1)")));
    }
    let d = features.dim();
    let slices = obs.slices();
    let mut out = PmviOutput::empty(shape, obs.mode);
    let mut steps = Vec::with_capacity(shape.horizon);

    for h in (0..shape.horizon).rev() {
        let slice = &slices[h];
        if slice.is_empty() {
            return Err(PmviError::EmptySlice(h));
        }
        let n = slice.len();
        let mut rows = Vec::with_capacity(n * d);
        let mut y_lower = DVector::zeros(n);
        let mut y_upper = DVector::zeros(n);
        for (i, t) in slice.iter().enumerate() {
            rows.extend_from_slice(features.phi(shape.tuple_index(t.s, t.a, t.b)));
            y_lower[i] = t.r + out.v_lower[h + 1][t.s_next];
            y_upper[i] = t.r + out.v_upper[h + 1][t.s_next];
        }
        let x = DMatrix::from_row_slice(n, d, &rows);

        let seed = derive_seed(estimator.seed, h as u64);
        let lower = fit(estimator, &x, y_lower, shape.horizon, d, delta, seed)?;
        let upper = fit(estimator, &x, y_upper, shape.horizon, d, delta, derive_seed(seed, 1))?;

        let mut lambda = x.tr_mul(&x);
        for i in 0..d {
            lambda[(i, i)] += 1.0;
        }
        let evaluator = BonusEvaluator::new(bonus, &lambda)?;
        let cap = shape.remaining(h);
        let mut q_lower = StageQ::zeros(shape);
        let mut q_upper = StageQ::zeros(shape);
        let mut gammas = StageQ::zeros(shape);
        for t in 0..shape.tuples() {
            let phi = features.phi(t);
            let g = evaluator.eval(phi);
            let lo: f64 = phi.iter().zip(lower.estimate.iter()).map(|(a, b)| a * b).sum();
            let hi: f64 = phi.iter().zip(upper.estimate.iter()).map(|(a, b)| a * b).sum();
            gammas.flat_mut()[t] = g;
            q_lower.flat_mut()[t] = clip(lo - g, cap);
            q_upper.flat_mut()[t] = clip(hi + g, cap);
        }
        solve_stage(&mut out, h, &q_lower, &q_upper)?;
        steps.push(StepDiagnostics {
            h,
            samples: n,
            weights_lower: lower.estimate.iter().copied().collect(),
            weights_upper: upper.estimate.iter().copied().collect(),
            removed_lower: lower.removed_count,
            removed_upper: upper.removed_count,
            status_lower: lower.status,
            status_upper: upper.status,
            bonus_max: gammas.flat().iter().copied().fold(0.0, f64::max),
            bonus_mean: gammas.flat().iter().sum::<f64>() / shape.tuples() as f64,
        });
        out.q_lower[h] = q_lower;
        out.q_upper[h] = q_upper;
        out.bonus[h] = gammas;
    }
    steps.reverse();
    out.steps = steps;
    Ok(out)
}

fn fit(
    cfg: &EstimatorConfig,
    x: &DMatrix<f64>,
    y: DVector<f64>,
    horizon: usize,
    d: usize,
    delta: f64,
    seed: u64,
) -> Result<RobustFit, PmviError> {
    let problem = || {
        RegressionProblem::new(x.clone(), y.clone())
            .with_epsilon(cfg.epsilon)
            .with_gamma(horizon as f64 + cfg.gamma)
            .with_radius(horizon as f64 * (d as f64).sqrt())
            .with_ridge(1.0)
            .with_delta(delta)
            .with_seed(seed)
    };
    Ok(match cfg.kind {
        EstimatorKind::Ridge => ridge_fit(x, &y, 1.0)?,
        EstimatorKind::Scram => scram_fit(&problem())?,
        EstimatorKind::Rls { kappa } => rls_fit(&problem(), kappa)?,
    })
}
